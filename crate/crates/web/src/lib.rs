//! Browser bindings for three small explorers: a pair of qubit projectors,
//! the distance bound curve, and the copy channel's hidden-measurement map.
//!
//! The [`explore`] functions are plain Rust so they can be tested natively;
//! the `#[wasm_bindgen]` wrappers only convert errors.

use wasm_bindgen::prelude::*;

pub mod explore {
    use std::f64::consts::PI;

    use qpvlab_core::bloch::{angle, trace_distance, QubitProjector};
    use qpvlab_core::hmc::{
        check_block_equations, check_definition1, check_xy_equations, lemma1_bound, ChannelShape,
        HiddenMeasurementInstance, HmcVerdict, IsometricChannel, DEFAULT_TOL,
    };
    use qpvlab_core::matkernel::{ComplexMatrix, C64};
    use serde::Serialize;

    fn projector(c: &[f64]) -> Result<QubitProjector, String> {
        match c {
            [a, b, z] => QubitProjector::from_bloch([*a, *b, *z]).map_err(|e| e.to_string()),
            _ => Err(format!("expected 3 Bloch coordinates, got {}", c.len())),
        }
    }

    #[derive(Serialize)]
    pub struct PairSummary {
        pub theta: f64,
        pub trace_distance: f64,
        pub two_sin_theta: f64,
        pub lemma1_bound: f64,
    }

    pub fn bloch_pair(p: &[f64], l: &[f64]) -> Result<PairSummary, String> {
        let (p, l) = (projector(p)?, projector(l)?);
        let theta = angle(&p, &l);
        Ok(PairSummary {
            theta,
            trace_distance: trace_distance(&p, &l),
            two_sin_theta: 2.0 * theta.sin(),
            lemma1_bound: lemma1_bound(theta).map_err(|e| e.to_string())?,
        })
    }

    /// `samples` evenly spaced values of the bound on `[0, π/2]`.
    pub fn lemma1_curve(samples: usize) -> Vec<f64> {
        let n = samples.max(2);
        (0..n)
            .map(|k| lemma1_bound(k as f64 * PI / 2.0 / (n - 1) as f64).unwrap_or(f64::NAN))
            .collect()
    }

    /// Copies the eigenbasis of `basis` into both outputs.
    pub fn copy_channel(basis: &QubitProjector) -> IsometricChannel {
        let (v, vp) = (basis.statevec(), basis.orthogonal_statevec());
        let u = ComplexMatrix::from_fn(4, 2, |o, i| {
            let (a, b) = (o / 2, o % 2);
            v[a] * v[b] * v[i].conj() + vp[a] * vp[b] * vp[i].conj()
        });
        IsometricChannel::new(
            u,
            ChannelShape {
                w_dim: 1,
                v1_dim: 2,
                v2_dim: 2,
            },
        )
        .expect("copy map is an isometry")
    }

    #[derive(Serialize)]
    pub struct CopyVerdicts {
        pub definition1: HmcVerdict,
        pub xy_equations: HmcVerdict,
        pub block_equations: HmcVerdict,
    }

    pub fn copy_channel_verdicts(basis: &[f64], test: &[f64]) -> Result<CopyVerdicts, String> {
        let channel = copy_channel(&projector(basis)?);
        let inst = HiddenMeasurementInstance::new(channel, vec![C64::new(1.0, 0.0)], projector(test)?)
            .map_err(|e| e.to_string())?;
        Ok(CopyVerdicts {
            definition1: check_definition1(&inst, DEFAULT_TOL),
            xy_equations: check_xy_equations(&inst, DEFAULT_TOL),
            block_equations: check_block_equations(&inst, DEFAULT_TOL),
        })
    }

    /// Max residual of the copy channel for `basis`, tested against every
    /// projector on a `rows x 2·rows` grid of polar angle (rows) by azimuth
    /// (columns), row-major.
    pub fn copy_channel_heatmap(basis: &[f64], rows: usize) -> Result<Vec<f64>, String> {
        let channel = copy_channel(&projector(basis)?);
        let rows = rows.max(2);
        let cols = 2 * rows;
        let w = vec![C64::new(1.0, 0.0)];
        let mut out = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            let polar = PI * i as f64 / (rows - 1) as f64;
            for j in 0..cols {
                let azimuth = 2.0 * PI * j as f64 / cols as f64;
                let c = [polar.sin() * azimuth.cos(), polar.sin() * azimuth.sin(), polar.cos()];
                let p = QubitProjector::from_bloch(c).map_err(|e| e.to_string())?;
                let inst = HiddenMeasurementInstance::new(channel.clone(), w.clone(), p).map_err(|e| e.to_string())?;
                out.push(check_definition1(&inst, DEFAULT_TOL).max_residual());
            }
        }
        Ok(out)
    }
}

fn js_err(e: String) -> JsError {
    JsError::new(&e)
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String, JsError> {
    serde_json::to_string(v).map_err(|e| JsError::new(&e.to_string()))
}

/// JSON summary of two projectors given by Bloch vectors.
#[wasm_bindgen]
pub fn bloch_pair(p: &[f64], l: &[f64]) -> Result<String, JsError> {
    to_json(&explore::bloch_pair(p, l).map_err(js_err)?)
}

#[wasm_bindgen]
pub fn lemma1_curve(samples: usize) -> Vec<f64> {
    explore::lemma1_curve(samples)
}

/// JSON verdicts of all three criteria for the copy channel in `basis`.
#[wasm_bindgen]
pub fn copy_channel_verdicts(basis: &[f64], test: &[f64]) -> Result<String, JsError> {
    to_json(&explore::copy_channel_verdicts(basis, test).map_err(js_err)?)
}

#[wasm_bindgen]
pub fn copy_channel_heatmap(basis: &[f64], rows: usize) -> Result<Vec<f64>, JsError> {
    explore::copy_channel_heatmap(basis, rows).map_err(js_err)
}
