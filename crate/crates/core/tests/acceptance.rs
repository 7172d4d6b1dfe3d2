//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs without the libtest harness so the lines are
//! always printed.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use eif_core::config::Config;
use eif_core::experiment::{run_accuracy_sweep, run_robustness_sweep, write_robustness, SweepSpec};
use eif_core::geometry::{BrickSpec, CameraModel, Pixel, PlanarOffset, Pose2, ToolPose};
use eif_core::knob::{
    eval_cost, find_bounding_lines, fit_circle, EstimatorError, FitWeights, BRACKET,
    DEFAULT_LINE_SUPPORT,
};
use eif_core::servo::Policy;
use eif_core::sim::{render_jittered_disc, NoiseModel, Target, World};
use eif_core::tilt::{max_observable_tilt, tilt_from_reflection, ReflectionMeasurement};

const SEED: u64 = 2024;

// Robustness.
const ROBUSTNESS_DELTAS: [f64; 5] = [0.4, 0.8, 1.2, 1.6, 2.0];
const ROBUSTNESS_TRIALS: usize = 12;
const OPEN_LOOP_LOW_DELTA: f64 = 0.4;
const OPEN_LOOP_HIGH_DELTA: f64 = 1.2;
const OPEN_LOOP_HIGH_MAX_RATE: f64 = 0.10;
const ROBUSTNESS_BUDGET: Duration = Duration::from_secs(60);

// Accuracy.
const POSITION_SD_MAX_MM: f64 = 0.05;
const TILT_SD_MAX_DEG: f64 = 0.15;
const ACCURACY_BUDGET: Duration = Duration::from_secs(30);

// Tilt formula.
const TILT_PER_PIXEL_DEG: f64 = 0.0690;
const TILT_PER_PIXEL_TOL: f64 = 0.0005;
const MAX_TILT_DEG: f64 = 16.1;
const MAX_TILT_TOL: f64 = 0.2;

// Optimizer oracle.
const ORACLE_MASKS: usize = 200;
const ORACLE_GRID_PX: f64 = 0.05;

// Pipeline closure.
const CLOSURE_FRACTION_OF_PITCH: f64 = 0.4;
const CLOSURE_YAW_RANGE_DEG: f64 = 5.0;
const CLOSURE_TRANSLATION_TOL_MM: f64 = 0.05;
const CLOSURE_YAW_TOL_DEG: f64 = 0.2;
const BASIN_MARGIN_MM: f64 = 0.1;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(name: &str, outcome: Result<Outcome, String>) -> bool {
    match outcome {
        Ok(o) => {
            println!(
                "{} {name}: {}",
                if o.pass { "PASS" } else { "FAIL" },
                o.detail
            );
            o.pass
        }
        Err(e) => {
            println!("FAIL {name}: error: {e}");
            false
        }
    }
}

fn robustness() -> Result<Outcome, String> {
    let config = Config::default();
    let spec = SweepSpec::robustness(ROBUSTNESS_DELTAS.to_vec(), ROBUSTNESS_TRIALS, SEED);
    let start = Instant::now();
    let result = run_robustness_sweep(&config, &spec).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let mut pass = elapsed < ROBUSTNESS_BUDGET;
    let mut parts = Vec::new();
    for d in ROBUSTNESS_DELTAS {
        let closed = result
            .rate(d, Policy::ClosedLoop)
            .ok_or("missing closed-loop rate")?;
        let open = result
            .rate(d, Policy::OpenLoop)
            .ok_or("missing open-loop rate")?;
        pass &= closed == 1.0;
        if d <= OPEN_LOOP_LOW_DELTA {
            pass &= open == 1.0;
        }
        if d >= OPEN_LOOP_HIGH_DELTA {
            pass &= open <= OPEN_LOOP_HIGH_MAX_RATE;
        }
        parts.push(format!(
            "δ={d:.1}: closed {:.0}% open {:.0}%",
            closed * 100.0,
            open * 100.0
        ));
    }
    Ok(Outcome {
        pass,
        detail: format!("{} ({:.1} s)", parts.join(", "), elapsed.as_secs_f64()),
    })
}

fn accuracy() -> Result<Outcome, String> {
    let config = Config::default();
    let start = Instant::now();
    let pos = run_accuracy_sweep(&config, &SweepSpec::accuracy_position(SEED))
        .map_err(|e| e.to_string())?;
    let tilt =
        run_accuracy_sweep(&config, &SweepSpec::accuracy_tilt(SEED)).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let sd = |r: &eif_core::experiment::AccuracyResult, a: &str| r.sd(a).unwrap_or(f64::NAN);
    let (sx, sy) = (sd(&pos, "x_mm"), sd(&pos, "y_mm"));
    let (tx, ty) = (sd(&tilt, "theta_x_deg"), sd(&tilt, "theta_y_deg"));
    let pass = pos.rows.len() == 49
        && tilt.rows.len() == 49
        && pos.summary.failures == 0
        && tilt.summary.failures == 0
        && sx <= POSITION_SD_MAX_MM
        && sy <= POSITION_SD_MAX_MM
        && tx <= TILT_SD_MAX_DEG
        && ty <= TILT_SD_MAX_DEG
        && elapsed < ACCURACY_BUDGET;
    Ok(Outcome {
        pass,
        detail: format!(
            "position SD x {sx:.4} y {sy:.4} mm (≤ {POSITION_SD_MAX_MM}), tilt SD x {tx:.4} y {ty:.4}° (≤ {TILT_SD_MAX_DEG}), {} + {} points ({:.1} s)",
            pos.rows.len(),
            tilt.rows.len(),
            elapsed.as_secs_f64()
        ),
    })
}

fn tilt_formula() -> Result<Outcome, String> {
    let cam = CameraModel::new(830.0, 830.0, 640, 480, Pixel::new(320.0, 240.0))
        .map_err(|e| e.to_string())?;
    let m = ReflectionMeasurement::new([1.0, 0.0].into(), &cam).map_err(|e| e.to_string())?;
    let per_px = tilt_from_reflection(&m, &cam).theta_x_deg;
    let max = max_observable_tilt(&cam);
    let max_deg = max.theta_x_deg.min(max.theta_y_deg);
    let pass = (per_px - TILT_PER_PIXEL_DEG).abs() <= TILT_PER_PIXEL_TOL
        && (max_deg - MAX_TILT_DEG).abs() <= MAX_TILT_TOL;
    Ok(Outcome {
        pass,
        detail: format!("1 px → {per_px:.5}°, max observable {max_deg:.3}° at 640×480"),
    })
}

fn optimizer_oracle() -> Result<Outcome, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let weights = FitWeights::default();
    let tool = Pixel::new(320.0, 240.0);
    let mut agree = 0;
    let mut worst = 0.0f64;
    for i in 0..ORACLE_MASKS {
        let r_true = rng.random_range(30.0..80.0);
        let center = Pixel::new(
            rng.random_range(120.0..520.0),
            rng.random_range(100.0..380.0),
        );
        let sigma = rng.random_range(0.0..1.5);
        let normal = Normal::new(0.0, sigma).map_err(|e| e.to_string())?;
        let jitter: Vec<f64> = (0..16).map(|_| normal.sample(&mut rng)).collect();
        let aperture = rng.random_bool(0.5).then(|| {
            (
                tool,
                (center - tool).norm() + rng.random_range(0.3..0.9) * r_true,
            )
        });
        let Some(mask) =
            render_jittered_disc(i as u32, center, r_true, &jitter, aperture, 640, 480)
        else {
            return Err(format!("mask {i} rendered empty"));
        };
        let r_exp = r_true * rng.random_range(0.85..1.15);
        let area = PI * r_exp * r_exp;
        let lines = find_bounding_lines(&mask, &tool, DEFAULT_LINE_SUPPORT)
            .map_err(|e| e.to_string())?
            .refined(r_exp);
        let fitted_r = match fit_circle(&mask, &lines, area, &weights) {
            Ok(k) => k.radius_px,
            Err(EstimatorError::NoInteriorMinimum { best }) => best.radius_px,
            Err(e) => return Err(e.to_string()),
        };
        let (lo, hi) = (BRACKET.0 * r_exp, BRACKET.1 * r_exp);
        let steps = ((hi - lo) / ORACLE_GRID_PX).floor() as usize;
        let mut best = (f64::INFINITY, lo);
        for k in 0..=steps {
            let r = lo + k as f64 * ORACLE_GRID_PX;
            let c = eval_cost(&mask, &lines.center_for_radius(r), r, area, &weights)
                .map_err(|e| e.to_string())?;
            if c < best.0 {
                best = (c, r);
            }
        }
        let gap = (fitted_r - best.1).abs();
        worst = worst.max(gap);
        if gap <= ORACLE_GRID_PX + 1e-9 {
            agree += 1;
        }
    }
    Ok(Outcome {
        pass: agree == ORACLE_MASKS,
        detail: format!("{agree}/{ORACLE_MASKS} within {ORACLE_GRID_PX} px of grid argmin (worst {worst:.3} px)"),
    })
}

fn closure_world(brick: BrickSpec, pose: Pose2, config: &Config) -> Result<World, String> {
    let mut w = World::new(
        config.camera,
        NoiseModel::NONE,
        config.tolerance,
        config.sim,
        0,
    )
    .map_err(|e| e.to_string())?;
    w.add_brick(brick, pose, 0).map_err(|e| e.to_string())?;
    Ok(w)
}

fn pipeline_closure() -> Result<Outcome, String> {
    let config = Config::default();
    let estimator = config.estimator(config.reference_calibration().map_err(|e| e.to_string())?);
    let pitch = config.brick.knob_pitch_mm();
    let reach = CLOSURE_FRACTION_OF_PITCH * pitch;
    let z = config.sim.brick_height_mm + config.estimator.view_distance_mm;

    // Brick displaced on a polar grid of translations, each with three yaws.
    let mut worst_t = 0.0f64;
    let mut worst_yaw = 0.0f64;
    let mut cases = 0;
    let mut failures = Vec::new();
    for ring in 0..=4 {
        let rho = reach * ring as f64 / 4.0;
        let spokes = if ring == 0 { 1 } else { 12 };
        for s in 0..spokes {
            let phi = 2.0 * PI * s as f64 / spokes as f64;
            for yaw in [-CLOSURE_YAW_RANGE_DEG, 0.0, CLOSURE_YAW_RANGE_DEG] {
                let injected = PlanarOffset::new(rho * phi.cos(), rho * phi.sin(), yaw);
                let mut w = closure_world(
                    config.brick,
                    Pose2::new(injected.dx_mm, injected.dy_mm, injected.dyaw_deg),
                    &config,
                )?;
                w.command_move(ToolPose::planar(0.0, 0.0, z, 0.0))
                    .map_err(|e| e.to_string())?;
                let truth = w
                    .truth_offset(&Target::Brick(0))
                    .map_err(|e| e.to_string())?;
                if (truth.translation() - injected.translation()).norm() > 1e-9
                    || (truth.dyaw_deg - injected.dyaw_deg).abs() > 1e-9
                {
                    return Err(format!(
                        "ground truth {truth:?} differs from injected {injected:?}"
                    ));
                }
                cases += 1;
                let obs = w.render().map_err(|e| e.to_string())?;
                match estimator.estimate(&obs) {
                    Ok(est) => {
                        let et = (est.offset.translation() - injected.translation()).norm();
                        let ey = (est.offset.dyaw_deg - injected.dyaw_deg).abs();
                        worst_t = worst_t.max(et);
                        worst_yaw = worst_yaw.max(ey);
                        if et > CLOSURE_TRANSLATION_TOL_MM || ey > CLOSURE_YAW_TOL_DEG {
                            failures.push(format!("{injected:?}"));
                        }
                    }
                    Err(e) => failures.push(format!("{injected:?}: {e}")),
                }
            }
        }
    }

    // Half-knob basin along the knob row axis.
    let mut basin = Vec::new();
    for s in [-1.0, 1.0] {
        for (mag, expect_true) in [
            (pitch / 2.0 - BASIN_MARGIN_MM, true),
            (pitch / 2.0 + BASIN_MARGIN_MM, false),
        ] {
            let x = s * mag;
            let mut w = closure_world(config.brick, Pose2::default(), &config)?;
            w.command_move(ToolPose::planar(x, 0.0, z, 0.0))
                .map_err(|e| e.to_string())?;
            let truth = w
                .truth_offset(&Target::Brick(0))
                .map_err(|e| e.to_string())?;
            let est = estimator
                .estimate(&w.render().map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            let took_true = (est.offset.dx_mm - truth.dx_mm).abs() < CLOSURE_TRANSLATION_TOL_MM;
            let took_neighbor =
                ((est.offset.dx_mm - truth.dx_mm).abs() - pitch).abs() < CLOSURE_TRANSLATION_TOL_MM;
            let ok = if expect_true {
                took_true
            } else {
                took_neighbor
            };
            basin.push(ok);
        }
    }
    let basin_ok = basin.iter().all(|b| *b);
    Ok(Outcome {
        pass: failures.is_empty() && basin_ok,
        detail: format!(
            "{} / {cases} offsets (|t| ≤ {reach:.1} mm, |yaw| ≤ {CLOSURE_YAW_RANGE_DEG}°) within tolerance, worst {worst_t:.4} mm / {worst_yaw:.4}°; basin at pitch/2 ± {BASIN_MARGIN_MM} mm {}",
            cases - failures.len(),
            if basin_ok { "ok" } else { "wrong" }
        ),
    })
}

fn read_dir_bytes(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .map(|e| {
            let e = e.map_err(|e| e.to_string())?;
            let bytes = fs::read(e.path()).map_err(|e| e.to_string())?;
            Ok((e.file_name().to_string_lossy().into_owned(), bytes))
        })
        .collect::<Result<_, String>>()?;
    files.sort();
    Ok(files)
}

fn determinism() -> Result<Outcome, String> {
    let config = Config::default();
    let spec = SweepSpec::robustness(ROBUSTNESS_DELTAS.to_vec(), ROBUSTNESS_TRIALS, SEED);
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let dir = tmp.path().join(run);
        let result = run_robustness_sweep(&config, &spec).map_err(|e| e.to_string())?;
        write_robustness(&dir, &result).map_err(|e| e.to_string())?;
        outputs.push(read_dir_bytes(&dir)?);
    }
    let same = outputs[0] == outputs[1] && !outputs[0].is_empty();
    Ok(Outcome {
        pass: same,
        detail: format!(
            "{} files, {} bytes, {}",
            outputs[0].len(),
            outputs[0].iter().map(|f| f.1.len()).sum::<usize>(),
            if same { "byte-identical" } else { "differ" }
        ),
    })
}

fn main() -> ExitCode {
    let results = [
        report("robustness", robustness()),
        report("accuracy", accuracy()),
        report("tilt-formula", tilt_formula()),
        report("optimizer-oracle", optimizer_oracle()),
        report("pipeline-closure", pipeline_closure()),
        report("determinism", determinism()),
    ];
    let passed = results.iter().filter(|p| **p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
