//! Instance files: a cone, a subspace, a norm pair and an optional linear map.

use conic_condition::cones::Cone;
use conic_condition::linalg::Subspace;
use conic_condition::measures::NormPair;
use conic_condition::norms::NormSpec;
use conic_condition::renegar::LinearMap;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub version: u32,
    pub n: usize,
    pub cone: ConeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subspace: Option<SubspaceSpec>,
    pub norms: NormsSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapSpec>,
}

/// `dim` may be omitted at the top level, where it defaults to `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConeSpec {
    Orthant {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
    },
    Soc {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
    },
    Psd {
        k: usize,
    },
    Product {
        parts: Vec<ConeSpec>,
    },
    Polyhedral2d {
        phi: f64,
    },
}

/// Matrices are lists of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SubspaceSpec {
    /// Spanning vectors, one per row.
    Basis(Vec<Vec<f64>>),
    /// Column space of an `n × m` matrix.
    ImageOf(Vec<Vec<f64>>),
    /// Null space of a `k × n` matrix.
    KernelOf(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormTag {
    L1,
    L2,
    Linf,
    InducedE,
    InducedEDual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormsSpec {
    pub primal: NormTag,
    pub tri: NormTag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    /// `n × m`, rows first.
    pub matrix: Vec<Vec<f64>>,
    pub domain_norm: NormTag,
}

/// A validated instance ready for computation.
#[derive(Debug, Clone)]
pub struct Instance {
    pub cone: Cone,
    pub subspace: Subspace,
    pub norms: NormPair,
    pub map: Option<LinearMap>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

impl ConeSpec {
    fn build(&self, dim: Option<usize>, field: &str) -> Result<Cone, CliError> {
        let need = |d: Option<usize>| {
            d.or(dim)
                .ok_or_else(|| invalid(format!("{field}.dim is required inside a product")))
        };
        let cone = match self {
            ConeSpec::Orthant { dim: d } => Cone::Orthant(need(*d)?),
            ConeSpec::Soc { dim: d } => {
                let d = need(*d)?;
                if d < 2 {
                    return Err(invalid(format!("{field}: soc needs dim >= 2, got {d}")));
                }
                Cone::SecondOrder(d)
            }
            ConeSpec::Psd { k } => Cone::Psd(*k),
            ConeSpec::Product { parts } => {
                if parts.is_empty() {
                    return Err(invalid(format!("{field}.parts is empty")));
                }
                let built = parts
                    .iter()
                    .enumerate()
                    .map(|(i, p)| p.build(None, &format!("{field}.parts[{i}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                Cone::Product(built)
            }
            ConeSpec::Polyhedral2d { phi } => {
                if !(phi.is_finite() && *phi > 0.0 && *phi < std::f64::consts::FRAC_PI_2) {
                    return Err(invalid(format!(
                        "{field}.phi must lie in (0, pi/2), got {phi}"
                    )));
                }
                Cone::Wedge2d { half_angle: *phi }
            }
        };
        if cone.dim() == 0 {
            return Err(invalid(format!("{field} has dimension 0")));
        }
        Ok(cone)
    }
}

impl NormTag {
    pub fn spec(self, cone: &Cone) -> NormSpec {
        match self {
            NormTag::L1 => NormSpec::l1(),
            NormTag::L2 => NormSpec::l2(),
            NormTag::Linf => NormSpec::linf(),
            NormTag::InducedE => NormSpec::induced_e(cone.clone()),
            NormTag::InducedEDual => NormSpec::induced_e_dual(cone.clone()),
        }
    }
}

fn matrix(rows: &[Vec<f64>], field: &str) -> Result<DMatrix<f64>, CliError> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 {
        return Err(invalid(format!("{field} is empty")));
    }
    if let Some(i) = rows.iter().position(|row| row.len() != c) {
        return Err(invalid(format!(
            "{field}[{i}] has {} entries, expected {c}",
            rows[i].len()
        )));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(invalid(format!("{field} has a non-finite entry")));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn core(field: &str) -> impl Fn(conic_condition::error::Error) -> CliError + '_ {
    move |e| CliError::from_core(e).context(field)
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let inst: InstanceFile =
            serde_json::from_str(text).map_err(|e| invalid(format!("instance: {e}")))?;
        if inst.version != FORMAT_VERSION {
            return Err(invalid(format!(
                "version: unsupported {}, expected {FORMAT_VERSION}",
                inst.version
            )));
        }
        Ok(inst)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serializes");
        s.push('\n');
        s
    }

    pub fn build(&self) -> Result<Instance, CliError> {
        let n = self.n;
        let cone = self.cone.build(Some(n), "cone")?;
        if cone.dim() != n {
            return Err(invalid(format!(
                "cone: dimension {} does not match n = {n}",
                cone.dim()
            )));
        }
        let norms = NormPair::new(self.norms.primal.spec(&cone), self.norms.tri.spec(&cone));
        norms.validate(n).map_err(core("norms"))?;
        let map = match &self.map {
            None => None,
            Some(m) => {
                let a = matrix(&m.matrix, "map.matrix")?;
                if a.nrows() != n {
                    return Err(invalid(format!(
                        "map.matrix: {} rows, expected n = {n}",
                        a.nrows()
                    )));
                }
                if matches!(m.domain_norm, NormTag::InducedE | NormTag::InducedEDual) {
                    return Err(invalid("map.domain_norm: must be l1, l2 or linf"));
                }
                let dn = m.domain_norm.spec(&cone);
                Some(LinearMap::new(a, dn, norms.clone()).map_err(core("map"))?)
            }
        };
        let subspace = match (&self.subspace, &map) {
            (Some(spec), _) => {
                let s = match spec {
                    SubspaceSpec::Basis(rows) => {
                        let b = matrix(rows, "subspace.basis")?;
                        if b.ncols() != n {
                            return Err(invalid(format!(
                                "subspace.basis: vectors have {} entries, expected n = {n}",
                                b.ncols()
                            )));
                        }
                        Subspace::from_columns(&b.transpose())
                    }
                    SubspaceSpec::ImageOf(rows) => {
                        let a = matrix(rows, "subspace.image_of")?;
                        if a.nrows() != n {
                            return Err(invalid(format!(
                                "subspace.image_of: {} rows, expected n = {n}",
                                a.nrows()
                            )));
                        }
                        Subspace::from_columns(&a)
                    }
                    SubspaceSpec::KernelOf(rows) => {
                        let a = matrix(rows, "subspace.kernel_of")?;
                        if a.ncols() != n {
                            return Err(invalid(format!(
                                "subspace.kernel_of: {} columns, expected n = {n}",
                                a.ncols()
                            )));
                        }
                        Subspace::kernel_of(&a)
                    }
                }
                .map_err(core("subspace"))?;
                if let Some(a) = &map {
                    let img = a.image().map_err(core("map"))?;
                    if !img.approx_eq(&s, 1e-9) {
                        return Err(invalid("map: image does not equal subspace"));
                    }
                }
                s
            }
            (None, Some(a)) => a.image().map_err(core("map"))?,
            (None, None) => return Err(invalid("subspace: required when map is absent")),
        };
        Ok(Instance {
            cone,
            subspace,
            norms,
            map,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GenCone {
    Orthant,
    Soc,
    Psd,
    Polyhedral2d,
}

/// Seeded random instance with an `n × m` image matrix rounded to six decimals.
pub fn generate(
    seed: u64,
    n: usize,
    m: usize,
    cone: GenCone,
    norms: NormsSpec,
    with_map: bool,
) -> Result<InstanceFile, CliError> {
    if m == 0 || m >= n {
        return Err(invalid(format!("m: need 0 < m < n, got m = {m}, n = {n}")));
    }
    let cone = match cone {
        GenCone::Orthant => ConeSpec::Orthant { dim: None },
        GenCone::Soc => ConeSpec::Soc { dim: None },
        GenCone::Psd => {
            let k = (1..=n).find(|k| k * (k + 1) / 2 >= n).unwrap_or(1);
            if k * (k + 1) / 2 != n {
                return Err(invalid(format!("n: psd needs n = k(k+1)/2, got {n}")));
            }
            ConeSpec::Psd { k }
        }
        GenCone::Polyhedral2d => {
            if n != 2 {
                return Err(invalid(format!("n: polyhedral2d needs n = 2, got {n}")));
            }
            ConeSpec::Polyhedral2d {
                phi: std::f64::consts::FRAC_PI_6,
            }
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..m)
                .map(|_| {
                    let g: f64 = rng.sample(StandardNormal);
                    (g * 1e6).round() / 1e6
                })
                .collect()
        })
        .collect();
    let (subspace, map) = if with_map {
        (
            None,
            Some(MapSpec {
                matrix: rows,
                domain_norm: NormTag::L2,
            }),
        )
    } else {
        (Some(SubspaceSpec::ImageOf(rows)), None)
    };
    Ok(InstanceFile {
        version: FORMAT_VERSION,
        n,
        cone,
        subspace,
        norms,
        map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Instance, CliError> {
        InstanceFile::parse(s)?.build()
    }

    #[test]
    fn minimal_orthant_instance() {
        let inst = parse(
            r#"{"version":1,"n":2,"cone":{"kind":"orthant"},
                "subspace":{"basis":[[1,1]]},"norms":{"primal":"l2","tri":"l2"}}"#,
        )
        .unwrap();
        assert_eq!(inst.cone, Cone::Orthant(2));
        assert_eq!(inst.subspace.dim(), 1);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let e = InstanceFile::parse(
            r#"{"version":1,"n":2,"cone":{"kind":"orthant"},"extra":0,
                "subspace":{"basis":[[1,1]]},"norms":{"primal":"l2","tri":"l2"}}"#,
        )
        .unwrap_err();
        assert!(e.to_string().contains("extra"), "{e}");
    }

    #[test]
    fn dimension_errors_name_the_field() {
        let e = parse(
            r#"{"version":1,"n":3,"cone":{"kind":"orthant"},
                "subspace":{"basis":[[1,1]]},"norms":{"primal":"l2","tri":"l2"}}"#,
        )
        .unwrap_err();
        assert!(e.to_string().contains("subspace.basis"), "{e}");
        let e = parse(
            r#"{"version":1,"n":3,"cone":{"kind":"psd","k":3},
                "subspace":{"basis":[[1,1,0]]},"norms":{"primal":"l2","tri":"l2"}}"#,
        )
        .unwrap_err();
        assert!(e.to_string().contains("cone"), "{e}");
    }

    #[test]
    fn product_parts_need_dimensions() {
        let e = parse(
            r#"{"version":1,"n":3,"cone":{"kind":"product","parts":[{"kind":"orthant"},{"kind":"soc","dim":2}]},
                "subspace":{"basis":[[1,1,0]]},"norms":{"primal":"l2","tri":"l2"}}"#,
        )
        .unwrap_err();
        assert!(e.to_string().contains("cone.parts[0].dim"), "{e}");
    }

    #[test]
    fn kernel_and_image_agree() {
        let a = parse(
            r#"{"version":1,"n":3,"cone":{"kind":"orthant"},
                "subspace":{"kernel_of":[[0,0,1]]},"norms":{"primal":"l1","tri":"l1"}}"#,
        )
        .unwrap();
        let b = parse(
            r#"{"version":1,"n":3,"cone":{"kind":"orthant"},
                "subspace":{"image_of":[[1,0],[0,1],[0,0]]},"norms":{"primal":"l1","tri":"l1"}}"#,
        )
        .unwrap();
        assert!(a.subspace.approx_eq(&b.subspace, 1e-12));
    }

    #[test]
    fn generated_instances_round_trip() {
        let norms = NormsSpec {
            primal: NormTag::L2,
            tri: NormTag::L2,
        };
        let g = generate(7, 4, 2, GenCone::Orthant, norms, false).unwrap();
        let text = g.to_json();
        let back = InstanceFile::parse(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_json(), text);
        back.build().unwrap();
    }
}
