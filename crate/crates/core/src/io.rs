//! JSON file formats.
//!
//! Complex numbers are `[re, im]` pairs. Matrices are
//! `{"rows": r, "cols": c, "entries": [[re, im], ...]}` in row-major order.
//! Projectors are strings: `"bloch:c1,c2,c3"` or `"vec:re_x,im_x,re_y,im_y"`.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bloch::QubitProjector;
use crate::error::{QpvError, Result};
use crate::hmc::{ChannelShape, HiddenMeasurementInstance, IsometricChannel};
use crate::matkernel::{ComplexMatrix, C64};
use crate::qpvsim::{BasisDecoders, CheatingStrategy, StrategyDims, TwoOutcomeMeasurement};

/// Serde adapter for `Vec<C64>` as a list of `[re, im]`.
pub mod complex_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<C64>, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(pairs.into_iter().map(|[re, im]| C64::new(re, im)).collect())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixLiteral {
    rows: usize,
    cols: usize,
    entries: Vec<[f64; 2]>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixLiteral {
            rows: self.rows(),
            cols: self.cols(),
            entries: self.entries_row_major().iter().map(|z| [z.re, z.im]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let lit = MatrixLiteral::deserialize(d)?;
        let entries = lit.entries.into_iter().map(|[re, im]| C64::new(re, im)).collect();
        ComplexMatrix::from_row_major(lit.rows, lit.cols, entries).map_err(D::Error::custom)
    }
}

/// On-disk form of an [`IsometricChannel`]. Unknown keys are ignored, so an
/// instance file also reads as its channel.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelFile {
    #[serde(rename = "U")]
    pub u: ComplexMatrix,
    pub w_dim: usize,
    pub v1_dim: usize,
    pub v2_dim: usize,
}

impl ChannelFile {
    pub fn from_channel(channel: &IsometricChannel) -> Self {
        let shape = channel.shape();
        Self {
            u: channel.matrix().clone(),
            w_dim: shape.w_dim,
            v1_dim: shape.v1_dim,
            v2_dim: shape.v2_dim,
        }
    }

    pub fn into_channel(self, cap: usize) -> Result<IsometricChannel> {
        let shape = ChannelShape {
            w_dim: self.w_dim,
            v1_dim: self.v1_dim,
            v2_dim: self.v2_dim,
        };
        IsometricChannel::with_cap(self.u, shape, cap).map_err(|e| QpvError::field("U", e))
    }
}

/// On-disk form of a [`HiddenMeasurementInstance`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    #[serde(rename = "U")]
    pub u: ComplexMatrix,
    pub w_dim: usize,
    pub v1_dim: usize,
    pub v2_dim: usize,
    #[serde(with = "complex_vec")]
    pub w: Vec<C64>,
    #[serde(rename = "P")]
    pub p: QubitProjector,
}

impl InstanceFile {
    pub fn from_instance(inst: &HiddenMeasurementInstance) -> Self {
        let shape = inst.channel().shape();
        Self {
            u: inst.channel().matrix().clone(),
            w_dim: shape.w_dim,
            v1_dim: shape.v1_dim,
            v2_dim: shape.v2_dim,
            w: inst.w().to_vec(),
            p: inst.projector().clone(),
        }
    }

    pub fn into_instance(self, cap: usize) -> Result<HiddenMeasurementInstance> {
        let channel = ChannelFile {
            u: self.u,
            w_dim: self.w_dim,
            v1_dim: self.v1_dim,
            v2_dim: self.v2_dim,
        }
        .into_channel(cap)?;
        HiddenMeasurementInstance::new(channel, self.w, self.p)
    }
}

pub fn parse_instance(json: &str, cap: usize) -> Result<HiddenMeasurementInstance> {
    serde_json::from_str::<InstanceFile>(json)?.into_instance(cap)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementFile {
    pub alice: [ComplexMatrix; 2],
    pub bob: [ComplexMatrix; 2],
}

/// On-disk form of a [`CheatingStrategy`]. Map keys are projector strings.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyFile {
    pub dims: StrategyDims,
    #[serde(with = "complex_vec")]
    pub psi: Vec<C64>,
    #[serde(rename = "U", with = "ordered_map")]
    pub u: Vec<(String, ComplexMatrix)>,
    #[serde(rename = "V")]
    pub v: ComplexMatrix,
    #[serde(default, skip_serializing_if = "Vec::is_empty", with = "ordered_map")]
    pub decoders: Vec<(String, MeasurementFile)>,
}

// Maps are written as JSON objects while keeping insertion order.
mod ordered_map {
    use super::*;
    use serde::de::{MapAccess, Visitor};
    use serde::ser::SerializeMap;
    use std::fmt;
    use std::marker::PhantomData;

    pub fn serialize<S: Serializer, V: Serialize>(v: &[(String, V)], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(v.len()))?;
        for (k, val) in v {
            map.serialize_entry(k, val)?;
        }
        map.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>, V: Deserialize<'de>>(
        d: D,
    ) -> std::result::Result<Vec<(String, V)>, D::Error> {
        struct V2<V>(PhantomData<V>);
        impl<'de, V: Deserialize<'de>> Visitor<'de> for V2<V> {
            type Value = Vec<(String, V)>;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut a: A) -> std::result::Result<Self::Value, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = a.next_entry()? {
                    out.push((k, v));
                }
                Ok(out)
            }
        }
        d.deserialize_map(V2(PhantomData))
    }
}

impl StrategyFile {
    pub fn from_strategy(s: &CheatingStrategy) -> Self {
        Self {
            dims: s.dims(),
            psi: s.psi().to_vec(),
            u: s.u_family().iter().map(|(p, u)| (p.to_string(), u.clone())).collect(),
            v: s.v().clone(),
            decoders: s
                .decoders()
                .iter()
                .map(|(p, d)| {
                    let m = MeasurementFile {
                        alice: [d.alice.element(0).clone(), d.alice.element(1).clone()],
                        bob: [d.bob.element(0).clone(), d.bob.element(1).clone()],
                    };
                    (p.to_string(), m)
                })
                .collect(),
        }
    }

    pub fn into_strategy(self, cap: usize) -> Result<CheatingStrategy> {
        let parse_key = |key: &str, k: &str| -> Result<QubitProjector> {
            k.parse().map_err(|e| QpvError::field(format!("{key}.{k}"), e))
        };
        let u_family = self
            .u
            .into_iter()
            .map(|(k, m)| Ok((parse_key("U", &k)?, m)))
            .collect::<Result<Vec<_>>>()?;
        let decoders = self
            .decoders
            .into_iter()
            .map(|(k, m)| {
                let p = parse_key("decoders", &k)?;
                let [a0, a1] = m.alice;
                let [b0, b1] = m.bob;
                let alice = TwoOutcomeMeasurement::new(a0, a1)
                    .map_err(|e| QpvError::field(format!("decoders.{k}.alice"), e))?;
                let bob =
                    TwoOutcomeMeasurement::new(b0, b1).map_err(|e| QpvError::field(format!("decoders.{k}.bob"), e))?;
                Ok((p, BasisDecoders { alice, bob }))
            })
            .collect::<Result<Vec<_>>>()?;
        CheatingStrategy::with_cap(self.dims, self.psi, u_family, self.v, decoders, cap)
    }
}

pub fn parse_strategy(json: &str, cap: usize) -> Result<CheatingStrategy> {
    serde_json::from_str::<StrategyFile>(json)?.into_strategy(cap)
}

pub fn strategy_to_json(s: &CheatingStrategy) -> String {
    serde_json::to_string_pretty(&StrategyFile::from_strategy(s)).expect("serializable")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matkernel::DEFAULT_DIM_CAP;
    use crate::qpvsim::{bb84_attack, do_nothing_strategy};

    fn copy_json(p: &str) -> String {
        format!(
            r#"{{"U": {{"rows": 4, "cols": 2, "entries": [[1,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[1,0]]}},
               "w_dim": 1, "v1_dim": 2, "v2_dim": 2, "w": [[1,0]], "P": "{p}"}}"#
        )
    }

    #[test]
    fn instance_file_reads_as_channel() {
        let file: ChannelFile = serde_json::from_str(&copy_json("bloch:0,0,1")).unwrap();
        let channel = file.into_channel(DEFAULT_DIM_CAP).unwrap();
        assert_eq!(channel, IsometricChannel::qubit_copy());
    }

    #[test]
    fn parses_instance() {
        let inst = parse_instance(&copy_json("bloch:0,0,1"), DEFAULT_DIM_CAP).unwrap();
        assert_eq!(inst.channel(), &IsometricChannel::qubit_copy());
        let back = serde_json::to_string(&InstanceFile::from_instance(&inst)).unwrap();
        assert_eq!(parse_instance(&back, DEFAULT_DIM_CAP).unwrap(), inst);
    }

    #[test]
    fn instance_errors_name_the_key() {
        let missing = r#"{"U": {"rows": 1, "cols": 2, "entries": [[1,0],[0,0]]}, "v1_dim": 1, "v2_dim": 1, "w": [[1,0]], "P": "bloch:0,0,1"}"#;
        let err = parse_instance(missing, DEFAULT_DIM_CAP).unwrap_err().to_string();
        assert!(err.contains("w_dim"), "{err}");
        let bad_p = copy_json("bloch:0,0");
        assert!(parse_instance(&bad_p, DEFAULT_DIM_CAP)
            .unwrap_err()
            .to_string()
            .contains("bloch:0,0"));
        let bad_entries = r#"{"U": {"rows": 4, "cols": 2, "entries": [[1,0]]}, "w_dim": 1, "v1_dim": 2, "v2_dim": 2, "w": [[1,0]], "P": "bloch:0,0,1"}"#;
        assert!(parse_instance(bad_entries, DEFAULT_DIM_CAP).is_err());
        let not_iso = copy_json("bloch:0,0,1").replace("[1,0]]}", "[2,0]]}");
        let err = parse_instance(&not_iso, DEFAULT_DIM_CAP).unwrap_err().to_string();
        assert!(err.contains("`U`"), "{err}");
        assert!(parse_instance(&copy_json("bloch:0,0,1")[..40], DEFAULT_DIM_CAP).is_err());
    }

    #[test]
    fn strategy_round_trip() {
        for s in [bb84_attack(), do_nothing_strategy(&[QubitProjector::y_eigenstate()])] {
            let json = strategy_to_json(&s);
            assert_eq!(parse_strategy(&json, DEFAULT_DIM_CAP).unwrap(), s);
        }
    }

    #[test]
    fn strategy_with_bad_projector_key() {
        let json = strategy_to_json(&do_nothing_strategy(&[QubitProjector::z_eigenstate()]))
            .replace("bloch:0,0,1", "bloch:zero");
        let err = parse_strategy(&json, DEFAULT_DIM_CAP).unwrap_err().to_string();
        assert!(err.contains("U.bloch:zero"), "{err}");
    }
}
