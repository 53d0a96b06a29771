//! WebAssembly entry points for `www/index.html`.
//!
//! Every exported function takes a JSON request string and returns a JSON
//! response string, so the page needs no generated bindings beyond
//! `wasm-bindgen`'s. The typed functions underneath are plain Rust and are
//! tested natively.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use vtf_core::gmm::{
    init_point, kmeanspp_init, recover_params, sample_gmm, GmmParams, GmmProblem, InitStrategy, KmeansOptions,
    SeparationLevel,
};
use vtf_core::manifold::{Geometry, MappingMode, StepRule};
use vtf_core::random::{random_spd, random_sym};
use vtf_core::rlbfgs::{solve, SolverConfig, Termination};
use vtf_core::symkernel::SpdPoint;
use wasm_bindgen::prelude::*;

fn default_k() -> usize {
    3
}
fn default_len() -> usize {
    300
}
fn default_max_iters() -> usize {
    300
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitRequest {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_len")]
    pub len: usize,
    #[serde(default)]
    pub separation: Option<SeparationLevel>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub step_rule: StepRule,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeRun {
    pub mode: MappingMode,
    pub label: &'static str,
    pub iterations: usize,
    pub termination: Termination,
    pub final_cost: f64,
    pub wall_time_ms: f64,
    pub cubic_calls_in_recursion: u64,
    pub cost_trace: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResponse {
    pub points: Vec<[f64; 2]>,
    pub truth: GmmParams,
    pub start: GmmParams,
    pub fitted: GmmParams,
    pub run: ModeRun,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareResponse {
    pub runs: Vec<ModeRun>,
}

struct Prepared {
    points: Vec<[f64; 2]>,
    truth: GmmParams,
    start: GmmParams,
    data: vtf_core::gmm::Dataset,
}

fn prepare(req: &FitRequest) -> Result<Prepared, String> {
    if req.k == 0 || req.len < req.k {
        return Err("need 1 <= k <= len".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
    let sep = req.separation.unwrap_or(SeparationLevel::Mid);
    let (data, truth) = sample_gmm(req.k, 2, req.len, sep, &mut rng).map_err(|e| e.to_string())?;
    let options = KmeansOptions {
        strategy: InitStrategy::Seeding,
        lloyd_iters: 0,
    };
    let start = kmeanspp_init(&data, req.k, options, &mut rng).map_err(|e| e.to_string())?;
    let points = (0..data.len()).map(|i| [data.point(i)[0], data.point(i)[1]]).collect();
    Ok(Prepared {
        points,
        truth,
        start,
        data,
    })
}

fn run_mode(p: &Prepared, req: &FitRequest, mode: MappingMode) -> Result<(ModeRun, GmmParams), String> {
    let problem = GmmProblem::new(&p.data);
    let config = SolverConfig {
        max_iters: req.max_iters,
        step_rule: req.step_rule,
        ..SolverConfig::default().with_mode(mode)
    };
    let x0 = init_point(&p.start).map_err(|e| e.to_string())?;
    let (point, stats) = solve(&problem, x0, &config).map_err(|e| e.to_string())?;
    let fitted = recover_params(&point).map_err(|e| e.to_string())?;
    let run = ModeRun {
        mode,
        label: mode.label(),
        iterations: stats.iterations,
        termination: stats.termination,
        final_cost: stats.final_cost,
        wall_time_ms: stats.wall_time * 1e3,
        cubic_calls_in_recursion: stats.cubic_calls_in_recursion,
        cost_trace: stats.cost_trace,
    };
    Ok((run, fitted))
}

/// Samples a 2-D mixture and fits it with the inverse-square-root mapping.
pub fn fit(req: &FitRequest) -> Result<FitResponse, String> {
    let p = prepare(req)?;
    let (run, fitted) = run_mode(&p, req, MappingMode::InverseSqrt)?;
    Ok(FitResponse {
        points: p.points,
        truth: p.truth,
        start: p.start,
        fitted,
        run,
    })
}

/// Same data, same start, one solve per representation mode.
pub fn compare(req: &FitRequest) -> Result<CompareResponse, String> {
    let p = prepare(req)?;
    let runs = MappingMode::ALL
        .iter()
        .map(|&m| run_mode(&p, req, m).map(|(r, _)| r))
        .collect::<Result<_, _>>()?;
    Ok(CompareResponse { runs })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetractionRequest {
    #[serde(default)]
    pub seed: u64,
    /// Matrix size.
    #[serde(default = "default_dim")]
    pub n: usize,
    /// Largest step length; the sweep goes down three decades from here.
    #[serde(default = "default_t_max")]
    pub t_max: f64,
}

fn default_dim() -> usize {
    3
}
fn default_t_max() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize)]
pub struct RetractionCurve {
    pub mode: MappingMode,
    pub label: &'static str,
    pub errors: Vec<f64>,
    /// Least-squares slope of log error against log t.
    pub order: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RetractionResponse {
    pub ts: Vec<f64>,
    pub curves: Vec<RetractionCurve>,
}

/// ‖Ret(tξ) − Exp(tξ)‖_F over a log-spaced sweep of t, per mode.
pub fn retraction_gap(req: &RetractionRequest) -> Result<RetractionResponse, String> {
    if req.n == 0 || req.n > 32 {
        return Err("n must be between 1 and 32".into());
    }
    if !(req.t_max > 0.0 && req.t_max.is_finite()) {
        return Err("t_max must be positive".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
    let base = std::sync::Arc::new(SpdPoint::new(random_spd(req.n, 1.0, &mut rng)).map_err(|e| e.to_string())?);
    let xi = random_sym(req.n, &mut rng);
    let ts: Vec<f64> = (0..16).map(|i| req.t_max * 10f64.powf(-(i as f64) / 5.0)).collect();
    let mut curves = Vec::new();
    for mode in MappingMode::ALL {
        let g = Geometry::new(mode);
        let v = g.map_tangent(&base, &xi).map_err(|e| e.to_string())?;
        let mut errors = Vec::with_capacity(ts.len());
        for &t in &ts {
            let tv = v.scale(t);
            let r = g.retract(&tv).map_err(|e| e.to_string())?;
            let e = g.exp_map(&tv).map_err(|e| e.to_string())?;
            errors.push(r.mat().sub(e.mat()).frob_norm());
        }
        curves.push(RetractionCurve {
            mode,
            label: mode.label(),
            order: loglog_slope(&ts, &errors),
            errors,
        });
    }
    Ok(RetractionResponse { ts, curves })
}

fn loglog_slope(ts: &[f64], errs: &[f64]) -> f64 {
    // roundoff floors the smallest errors, so fit only the points well above it
    let pts: Vec<(f64, f64)> = ts
        .iter()
        .zip(errs)
        .filter(|(_, &e)| e > 1e-11)
        .map(|(&t, &e)| (t.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let num: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    num / den
}

fn handle<Req, Resp>(json: &str, f: impl FnOnce(&Req) -> Result<Resp, String>) -> Result<String, JsValue>
where
    Req: for<'de> Deserialize<'de>,
    Resp: Serialize,
{
    let req: Req = serde_json::from_str(json).map_err(|e| JsValue::from_str(&e.to_string()))?;
    let resp = f(&req).map_err(|e| JsValue::from_str(&e))?;
    serde_json::to_string(&resp).map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen]
pub fn fit_gmm(request: &str) -> Result<String, JsValue> {
    handle(request, fit)
}

#[wasm_bindgen]
pub fn compare_modes(request: &str) -> Result<String, JsValue> {
    handle(request, compare)
}

#[wasm_bindgen]
pub fn retraction_sweep(request: &str) -> Result<String, JsValue> {
    handle(request, retraction_gap)
}
