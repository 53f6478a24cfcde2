//! Browser bindings. Every export returns a JSON string or an error message.

use commutant::approx::{commuting_approximants, BinningParams, Certificate};
use commutant::events::{run_event_pipeline, EventConstants};
use commutant::harness::generate::geometric_spectrum;
use commutant::harness::{gen_instance, InstanceKind, InstanceRecipe, RotationFamily};
use commutant::linalg::{hermitian_eig, operator_norm, DEFAULT_EIG_TOL};
use commutant::spectral::ObservableSpec;
use commutant::Tolerances;
use serde::Serialize;
use wasm_bindgen::prelude::wasm_bindgen;

/// Largest dimension accepted from the page.
pub const MAX_DIM: usize = 48;

#[derive(Serialize)]
struct BinView {
    lo: f64,
    hi: f64,
    size: usize,
    representative: f64,
}

#[derive(Serialize)]
struct ApproxView {
    eigenvalues: Vec<f64>,
    low_threshold: f64,
    gap_threshold: f64,
    bins: Vec<BinView>,
    zero_bin_size: usize,
    certificate: Certificate,
}

#[derive(Serialize)]
struct CurvePoint {
    eps: f64,
    d_x: f64,
    bound_d_x: f64,
    d_omega: f64,
    bound_d_omega: f64,
    delta_eps: f64,
}

#[derive(Serialize)]
struct EventPoint {
    theta: f64,
    d3: f64,
    tail: f64,
    fin_comms: f64,
    all_pass: bool,
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

fn check_dim(dim: usize) -> Result<(), String> {
    if (2..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(format!("dimension must lie in 2..={MAX_DIM}, got {dim}"))
    }
}

fn recipe(kind: &str, dim: usize, eps: f64, seed: u32) -> Result<InstanceRecipe, String> {
    check_dim(dim)?;
    let kind: InstanceKind = kind.parse().map_err(|e: commutant::Error| e.to_string())?;
    Ok(InstanceRecipe::new(kind, dim, eps, u64::from(seed)))
}

/// Spectrum of `Omega`, its gap binning, and the certificate for one instance.
#[wasm_bindgen]
pub fn approximate(kind: &str, dim: usize, eps: f64, seed: u32, delta_exp: f64, beta_exp: f64) -> Result<String, String> {
    let inst = gen_instance(&recipe(kind, dim, eps, seed)?).map_err(|e| e.to_string())?;
    let scale = operator_norm(&inst.x).max(1.0);
    let params = BinningParams::new(inst.eps_measured / scale, delta_exp, beta_exp).map_err(|e| e.to_string())?;
    let out = commuting_approximants(&inst.omega, &inst.x, &params, &Tolerances::default()).map_err(|e| e.to_string())?;
    let mut eigenvalues = hermitian_eig(inst.omega.hermitian(), DEFAULT_EIG_TOL)
        .map_err(|e| e.to_string())?
        .values;
    eigenvalues.reverse();
    let (bins, zero_bin_size) = match &out.binning {
        Some(b) => (
            b.bins
                .iter()
                .map(|bin| BinView {
                    lo: bin.lo,
                    hi: bin.hi,
                    size: bin.len(),
                    representative: bin.representative,
                })
                .collect(),
            b.zero_bin.len(),
        ),
        None => (Vec::new(), 0),
    };
    to_json(&ApproxView {
        eigenvalues,
        low_threshold: params.low_threshold(),
        gap_threshold: params.gap_threshold(),
        bins,
        zero_bin_size,
        certificate: out.cert,
    })
}

/// Distances and bounds at `points` log-spaced targets between `10^lo_exp` and `10^hi_exp`.
/// Targets where the construction does not apply are left out.
#[wasm_bindgen]
pub fn bound_curve(kind: &str, dim: usize, seed: u32, lo_exp: f64, hi_exp: f64, points: usize) -> Result<String, String> {
    if !(lo_exp < hi_exp && hi_exp < 0.0) || !(2..=40).contains(&points) {
        return Err("need lo_exp < hi_exp < 0 and 2..=40 points".into());
    }
    let tol = Tolerances::default();
    let mut curve = Vec::new();
    for i in 0..points {
        let e = lo_exp + (hi_exp - lo_exp) * i as f64 / (points - 1) as f64;
        let r = recipe(kind, dim, 10f64.powf(e), seed)?;
        let Ok(inst) = gen_instance(&r) else { continue };
        let scale = operator_norm(&inst.x).max(1.0);
        let Ok(params) = BinningParams::with_epsilon(inst.eps_measured / scale) else { continue };
        let Ok(out) = commuting_approximants(&inst.omega, &inst.x, &params, &tol) else { continue };
        let c = out.cert;
        curve.push(CurvePoint {
            eps: c.eps,
            d_x: c.d_x,
            bound_d_x: c.bound_d_x,
            d_omega: c.d_omega,
            bound_d_omega: c.bound_d_omega,
            delta_eps: c.delta_eps,
        });
    }
    to_json(&curve)
}

/// Event pipeline residuals as the event basis rotates away from the observable basis.
#[wasm_bindgen]
pub fn event_curve(dim: usize, seed: u32, eps: f64, lo_exp: f64, hi_exp: f64, points: usize) -> Result<String, String> {
    check_dim(dim)?;
    if !(lo_exp < hi_exp && hi_exp <= 0.0) || !(2..=40).contains(&points) {
        return Err("need lo_exp < hi_exp <= 0 and 2..=40 points".into());
    }
    let family = RotationFamily::new(dim, u64::from(seed)).map_err(|e| e.to_string())?;
    let weights = geometric_spectrum(dim, 0.7);
    let tol = Tolerances::default();
    let consts = EventConstants::default();
    let mut curve = Vec::new();
    for i in 0..points {
        let theta = 10f64.powf(lo_exp + (hi_exp - lo_exp) * i as f64 / (points - 1) as f64);
        let ev = family.at(theta);
        let run = ev.state(&weights).and_then(|omega| {
            let x = ev.observable();
            let obs = ObservableSpec::from_hermitian(&x, &tol)?;
            run_event_pipeline(&omega, &x, &ev.event()?, &obs, eps, &consts)
        });
        // large angles can break projection rounding
        let Ok(run) = run else { continue };
        curve.push(EventPoint {
            theta,
            d3: run.chain.diagnostics.d3,
            tail: run.report.tail.value,
            fin_comms: run.chain.diagnostics.fin_comms,
            all_pass: run.report.all_pass(),
        });
    }
    to_json(&curve)
}
