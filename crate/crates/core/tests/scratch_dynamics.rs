// Temporary diagnostics; deleted before finishing.

use nalgebra::Vector3;
use palpate_core::exploration::Strategy;
use palpate_core::mesh::{make_icosphere, make_rounded_box};
use palpate_core::session::{run_session_with_truth, SessionConfig};

#[test]
#[ignore]
fn reg_grid() {
    let truth = make_icosphere(0.1, 4).unwrap();
    for c in [1.0, 3.0, 10.0] {
        for (subdiv, thr) in [(3u32, 5usize), (4, 2)] {
            for fit_iters in [500usize, 5000] {
                let mut ok = 0;
                let mut worst: f64 = 0.0;
                let mut fails = 0;
                let t0 = std::time::Instant::now();
                for seed in [1u64, 2, 3] {
                    let mut cfg = SessionConfig::default();
                    cfg.truth_mesh_path = "mem".into();
                    cfg.seed = seed;
                    cfg.visual.seed = seed;
                    cfg.chamfer_samples = 40_000;
                    cfg.max_iterations = 30;
                    cfg.template_subdivisions = subdiv;
                    cfg.field.traverse_threshold = thr;
                    cfg.fit.max_iterations = fit_iters;
                    let (mm, f) = run_with_reg_scale(cfg, truth.clone(), c);
                    worst = worst.max(mm);
                    fails += f;
                    if mm < 2.0 {
                        ok += 1;
                    }
                }
                println!(
                    "c {c:>5.0e} subdiv {subdiv} thr {thr} fit {fit_iters:>5}: {ok}/3 < 2mm, worst {worst:7.3} mm, fails {fails:>2}, {:?}",
                    t0.elapsed()
                );
            }
        }
    }
}

fn run_with_reg_scale(
    mut cfg: SessionConfig,
    truth: palpate_core::mesh::TriangleMesh,
    scale: f64,
) -> (f64, usize) {
    use palpate_core::local_deform::compute_displacement_samples;
    use palpate_core::session::SessionState;
    use palpate_core::template_fit::instantiate_template;

    // Estimate mean site spacing from the visual prior to freeze an
    // absolute regularization equivalent to scale * spacing^3.
    cfg.deform.regularization = None;
    let probe_state = SessionState::new(cfg.clone(), truth.clone()).unwrap();
    let global = instantiate_template(&probe_state.template, &probe_state.params).unwrap();
    let samples = compute_displacement_samples(&global, &probe_state.attractors);
    let mut total = 0.0;
    for (i, s) in samples.iter().enumerate() {
        let mut nearest = f64::INFINITY;
        for (j, t) in samples.iter().enumerate() {
            if i != j {
                nearest = nearest.min((s.site - t.site).norm());
            }
        }
        total += nearest;
    }
    let spacing = total / samples.len() as f64;
    cfg.deform.regularization = Some(scale * spacing.powi(3));
    let run = run_session_with_truth(cfg, truth).unwrap();
    let last = run.state.records.last().unwrap();
    (last.chamfer_m * 1000.0, last.cumulative_failures)
}

#[test]
#[ignore]
fn sphere_grid() {
    let truth = make_icosphere(0.1, 4).unwrap();
    for (subdiv, thr, fit_iters) in [
        (3u32, 5usize, 500usize),
        (4, 5, 500),
        (3, 2, 500),
        (4, 2, 500),
        (4, 3, 2000),
        (3, 5, 5000),
        (4, 5, 5000),
        (4, 3, 5000),
    ] {
        let mut ok = 0;
        let mut worst: f64 = 0.0;
        let mut fails = 0;
        let t0 = std::time::Instant::now();
        for seed in [1u64, 2, 3] {
            let mut cfg = SessionConfig::default();
            cfg.truth_mesh_path = "mem".into();
            cfg.seed = seed;
            cfg.visual.seed = seed;
            cfg.chamfer_samples = 10_000;
            cfg.max_iterations = 30;
            cfg.template_subdivisions = subdiv;
            cfg.field.traverse_threshold = thr;
            cfg.fit.max_iterations = fit_iters;
            let run = run_session_with_truth(cfg, truth.clone()).unwrap();
            let last = run.state.records.last().unwrap();
            let mm = last.chamfer_m * 1000.0;
            worst = worst.max(mm);
            fails += last.cumulative_failures;
            if mm < 2.0 {
                ok += 1;
            }
        }
        println!(
            "subdiv {subdiv} thr {thr} fit {fit_iters:>5}: {ok}/3 under 2mm, worst {worst:7.3} mm, fails {fails:>2}, {:?}",
            t0.elapsed()
        );
    }
}

#[test]
#[ignore]
fn sphere_detail() {
    use palpate_core::mesh::{chamfer_distance, sample_surface};
    use palpate_core::session::SessionState;
    use palpate_core::template_fit::instantiate_template;

    let truth = make_icosphere(0.1, 4).unwrap();
    let truth_cloud = sample_surface(&truth, 10_000, 999).unwrap();
    let floor = chamfer_distance(
        &sample_surface(&truth, 10_000, 1).unwrap(),
        &truth_cloud,
    )
    .unwrap();
    println!("sampling floor: {:.3} mm", floor * 1000.0);

    let mut cfg = SessionConfig::default();
    cfg.truth_mesh_path = "mem".into();
    cfg.seed = 1;
    cfg.visual.seed = 1;
    cfg.chamfer_samples = 10_000;
    cfg.template_subdivisions = 4;
    cfg.field.traverse_threshold = 2;
    let mut state = SessionState::new(cfg.clone(), truth.clone()).unwrap();
    for i in 0..=30 {
        if i > 0 && state.run_iteration().is_err() {
            println!("exploration complete at {i}");
            break;
        }
        let global = instantiate_template(&state.template, &state.params).unwrap();
        let global_cloud = sample_surface(&global, 10_000, cfg.seed).unwrap();
        let global_chamfer = chamfer_distance(&global_cloud, &truth_cloud).unwrap();
        let r = *state.records.last().unwrap();
        println!(
            "iter {:>2} chamfer {:7.3} mm | global-only {:7.3} mm | axes {:?} t {:?}",
            r.iteration,
            r.chamfer_m * 1000.0,
            global_chamfer * 1000.0,
            state.params.semi_axes().map(|a| (a * 1000.0).round()),
            state.params.translation.map(|a| (a * 1000.0).round()),
        );
    }
}

#[test]
#[ignore]
fn deform_diagnostics() {
    use palpate_core::local_deform::{compute_displacement_samples, fit_interpolant};
    use palpate_core::session::SessionState;
    use palpate_core::template_fit::instantiate_template;

    let truth = make_icosphere(0.1, 4).unwrap();
    let mut cfg = SessionConfig::default();
    cfg.truth_mesh_path = "mem".into();
    cfg.seed = 1;
    cfg.visual.seed = 1;
    cfg.chamfer_samples = 10_000;
    cfg.template_subdivisions = 4;
    cfg.field.traverse_threshold = 2;
    let mut state = SessionState::new(cfg.clone(), truth.clone()).unwrap();
    for _ in 0..30 {
        let _ = state.run_iteration();
    }
    let global = instantiate_template(&state.template, &state.params).unwrap();
    let samples = compute_displacement_samples(&global, &state.attractors);
    let f = fit_interpolant(&samples, 0.0).unwrap();
    let max_d = samples
        .iter()
        .map(|s| s.displacement.abs())
        .fold(0.0, f64::max);
    let max_w = f.weights().iter().map(|w| w.abs()).fold(0.0, f64::max);
    println!(
        "samples {} max|d| {:.4} mm, max|w| {:.3e}, affine {:?}",
        samples.len(),
        max_d * 1000.0,
        max_w,
        f.affine()
    );
    // Evaluate F at confident vs unexplored vertices.
    let mut far = Vec::new();
    let mut near = Vec::new();
    for (i, v) in global.vertices().iter().enumerate() {
        let fv = f.evaluate(v);
        if state.field.values[i] >= 0.999 {
            far.push(fv.abs());
        } else {
            near.push(fv.abs());
        }
    }
    let stats = |xs: &[f64]| {
        let mean = xs.iter().sum::<f64>() / xs.len().max(1) as f64;
        let max = xs.iter().cloned().fold(0.0, f64::max);
        (mean * 1000.0, max * 1000.0)
    };
    println!(
        "explored vertices {}: |F| mean/max {:?} mm; unexplored {}: {:?} mm",
        near.len(),
        stats(&near),
        far.len(),
        stats(&far)
    );
}

#[test]
#[ignore]
fn sphere_trajectory() {
    let mut cfg = SessionConfig::default();
    cfg.truth_mesh_path = "mem".into();
    cfg.seed = 1;
    cfg.visual.seed = 1;
    cfg.chamfer_samples = 40_000;
    cfg.max_iterations = 30;
    cfg.visual.position_noise_sigma = 0.001;
    let truth = make_icosphere(0.1, 4).unwrap();
    let t0 = std::time::Instant::now();
    let run = run_session_with_truth(cfg, truth).unwrap();
    for r in &run.state.records {
        println!(
            "iter {:>2}  chamfer {:8.4} mm  fails {:>2}  attr {:>3}  sel {:?}  {}",
            r.iteration,
            r.chamfer_m * 1000.0,
            r.cumulative_failures,
            r.n_attractors,
            r.selected_vertex,
            r.outcome.as_str()
        );
    }
    println!("early: {}  elapsed {:?}", run.completed_early, t0.elapsed());
}

#[test]
#[ignore]
fn fit_on_cap_data() {
    use palpate_core::sensing::{sample_visual_prior, VisualPriorConfig};
    use palpate_core::template_fit::{
        ellipsoid_loss, fit_ellipsoid, EllipsoidParams, FitConfig,
    };

    let truth = make_icosphere(0.1, 4).unwrap();
    let cfg = VisualPriorConfig {
        seed: 1,
        ..VisualPriorConfig::default()
    };
    let attractors = sample_visual_prior(&truth, &cfg).unwrap();
    let init = EllipsoidParams::modest_init(&attractors, 0.75).unwrap();
    println!("init: {}", init.to_record());
    println!(
        "loss at init: {:.6}",
        ellipsoid_loss(&attractors, &init, false).unwrap()
    );
    for max_iter in [500usize, 2000, 10000, 50000] {
        let fc = FitConfig {
            max_iterations: max_iter,
            ..FitConfig::default()
        };
        let t0 = std::time::Instant::now();
        let fit = fit_ellipsoid(&attractors, &init, &fc).unwrap();
        println!(
            "max_iter {:>6}: used {:>6}, loss {:.8}, axes {:?}, t {:?}, elapsed {:?}",
            max_iter,
            fit.iterations,
            fit.loss,
            fit.params.semi_axes(),
            fit.params.translation,
            t0.elapsed()
        );
    }
    // Loss at the true sphere for reference.
    let mut truth_params = EllipsoidParams::identity();
    truth_params.scale = nalgebra::Vector3::repeat(10.0);
    println!(
        "loss at truth: {:.6}",
        ellipsoid_loss(&attractors, &truth_params, false).unwrap()
    );
}

#[test]
#[ignore]
fn first_iteration_geometry() {
    use palpate_core::exploration::{candidate_pose, select_next_ours};
    use palpate_core::mesh::segment_intersect;
    use palpate_core::session::SessionState;

    let mut cfg = SessionConfig::default();
    cfg.truth_mesh_path = "mem".into();
    cfg.seed = 1;
    cfg.visual.seed = 1;
    cfg.chamfer_samples = 10_000;
    let use_box = std::env::var("BOX").is_ok();
    let truth = if use_box {
        cfg.visual.view_direction = Vector3::new(-1.0, -0.5, -1.2);
        cfg.template_subdivisions = 4;
        cfg.field.traverse_threshold = 2;
        make_rounded_box(Vector3::new(0.035, 0.025, 0.055), 0.008, 3).unwrap()
    } else {
        make_icosphere(0.1, 4).unwrap()
    };
    let state = SessionState::new(cfg.clone(), truth.clone()).unwrap();

    println!("params: {}", state.params.to_record());
    println!("semi axes: {:?}", state.params.semi_axes());
    let conf = state
        .field
        .values
        .iter()
        .filter(|&&u| u <= cfg.explore.u_prime_max)
        .count();
    println!(
        "confident {} / {}; min u {:.3}",
        conf,
        state.field.values.len(),
        state.field.values.iter().cloned().fold(f64::INFINITY, f64::min)
    );

    let (w, scores) = select_next_ours(&state.estimate, &state.field, &cfg.explore).unwrap();
    println!("candidates: {}", scores.len());
    let (p, n) = candidate_pose(&state.estimate, w);
    println!("selected {w} at {p:?} |p| = {:.4}, normal {n:?}", p.coords.norm());
    let start = p + n * cfg.probe_travel_d;
    let end = p - n * cfg.probe_travel_d;
    match segment_intersect(&truth, &start, &end) {
        Some(hit) => println!(
            "hit at {:?}, miss distance {:.4} m (threshold {})",
            hit.point,
            (hit.point - p).norm(),
            cfg.failure_threshold
        ),
        None => println!("no intersection: start {start:?} end {end:?}"),
    }
    // How far is each candidate's estimate point from the truth?
    for s in scores.iter().take(10) {
        let (cp, cn) = candidate_pose(&state.estimate, s.vertex_index);
        let hit = segment_intersect(&truth, &(cp + cn * 0.05), &(cp - cn * 0.05));
        println!(
            "  cand {:>3} g {:.3} u {:.3} total {:.3} |p|={:.4} miss={:?}",
            s.vertex_index,
            s.g,
            s.u,
            s.total,
            cp.coords.norm(),
            hit.map(|h| (h.point - cp).norm())
        );
    }
}

#[test]
#[ignore]
fn box_grid() {
    for (hx, hy, hz, r) in [
        (0.030, 0.025, 0.040, 0.018),
        (0.030, 0.025, 0.040, 0.022),
        (0.035, 0.030, 0.045, 0.020),
        (0.035, 0.030, 0.050, 0.025),
    ] {
        let truth = make_rounded_box(Vector3::new(hx, hy, hz), r, 3).unwrap();
        for (subdiv, thr) in [(4u32, 2usize), (3, 5)] {
            for strategy in [Strategy::Ours, Strategy::MinU] {
                let mut mm = Vec::new();
                let mut fails = Vec::new();
                let t0 = std::time::Instant::now();
                for seed in [1u64, 2, 3, 4, 5] {
                    let mut cfg = SessionConfig::default();
                    cfg.truth_mesh_path = "mem".into();
                    cfg.chamfer_samples = 20_000;
                    cfg.max_iterations = 50;
                    cfg.visual.view_direction = Vector3::new(-1.0, -0.5, -1.2);
                    cfg.template_subdivisions = subdiv;
                    cfg.field.traverse_threshold = thr;
                    cfg.seed = seed;
                    cfg.visual.seed = seed;
                    cfg.explore.strategy = strategy;
                    let run = run_session_with_truth(cfg, truth.clone()).unwrap();
                    let last = run.state.records.last().unwrap();
                    mm.push(last.chamfer_m * 1000.0);
                    fails.push(last.cumulative_failures as f64);
                }
                let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
                println!(
                    "box ({hx},{hy},{hz},{r}) subdiv {subdiv} thr {thr} {:<5}: chamfer {:7.3} mm {:?}, fails {:5.1} {:?}, {:?}",
                    strategy.as_str(),
                    mean(&mm),
                    mm.iter().map(|m| (m * 10.0).round() / 10.0).collect::<Vec<_>>(),
                    mean(&fails),
                    fails,
                    t0.elapsed()
                );
            }
        }
    }
}

#[test]
#[ignore]
fn box_session_trace() {
    use palpate_core::exploration::{candidate_pose, select_next_ours};
    use palpate_core::local_deform::{compute_displacement_samples, fit_interpolant};
    use palpate_core::mesh::segment_intersect;
    use palpate_core::session::SessionState;
    use palpate_core::template_fit::instantiate_template;

    let truth = make_rounded_box(Vector3::new(0.03, 0.025, 0.04), 0.015, 3).unwrap();
    let mut cfg = SessionConfig::default();
    cfg.truth_mesh_path = "mem".into();
    cfg.seed = 1;
    cfg.visual.seed = 1;
    cfg.chamfer_samples = 10_000;
    cfg.template_subdivisions = 4;
    cfg.field.traverse_threshold = 2;
    cfg.visual.view_direction = Vector3::new(-1.0, -0.5, -1.2);
    if let Ok(v) = std::env::var("CLAMP") {
        cfg.deform.max_displacement = Some(v.parse().unwrap());
    }
    let mut state = SessionState::new(cfg.clone(), truth.clone()).unwrap();

    for i in 1..=20 {
        let sel = match select_next_ours(&state.estimate, &state.field, &cfg.explore) {
            Ok((w, _)) => w,
            Err(_) => {
                println!("exploration complete");
                break;
            }
        };
        let (p, n) = candidate_pose(&state.estimate, sel);
        let miss = segment_intersect(&truth, &(p + n * 0.05), &(p - n * 0.05))
            .map(|h| (h.point - p).norm());
        if miss.is_none() {
            println!(
                "    pose p ({:6.1} {:6.1} {:6.1}) mm  n ({:5.2} {:5.2} {:5.2})",
                p.x * 1000.0,
                p.y * 1000.0,
                p.z * 1000.0,
                n.x,
                n.y,
                n.z
            );
        }

        let global = instantiate_template(&state.template, &state.params).unwrap();
        let samples = compute_displacement_samples(&global, &state.attractors);
        let max_d = samples
            .iter()
            .map(|s| s.displacement.abs())
            .fold(0.0, f64::max);
        let clamp = 0.5 * state.params.semi_axes().min();
        let spacing_reg = {
            let f = fit_interpolant(&samples, 0.0).ok();
            f.map(|f| f.weights().iter().map(|w| w.abs()).fold(0.0, f64::max))
        };
        let r = state.run_iteration().unwrap();
        println!(
            "iter {i:>2} sel {sel:>4} miss {:>8} mm  {}  axes {:?} max|d| {:5.1} mm clamp {:5.1} mm max|w0| {:?}",
            miss.map(|m| format!("{:.2}", m * 1000.0))
                .unwrap_or_else(|| "none".into()),
            r.outcome.as_str(),
            state.params.semi_axes().map(|a| (a * 1000.0).round()),
            max_d * 1000.0,
            clamp * 1000.0,
            spacing_reg.map(|w| format!("{w:.1e}")),
        );
    }
}

#[test]
#[ignore]
fn box_comparison() {
    let mut cfg = SessionConfig::default();
    cfg.truth_mesh_path = "mem".into();
    cfg.chamfer_samples = 20_000;
    cfg.max_iterations = 50;
    let truth = make_rounded_box(Vector3::new(0.035, 0.025, 0.055), 0.008, 3).unwrap();
    cfg.visual.view_direction = Vector3::new(-1.0, -0.5, -1.2);
    for strategy in [Strategy::Ours, Strategy::MinU] {
        for seed in [1u64, 2, 3] {
            let mut c = cfg.clone();
            c.seed = seed;
            c.visual.seed = seed;
            c.explore.strategy = strategy;
            let t0 = std::time::Instant::now();
            let run = run_session_with_truth(c, truth.clone()).unwrap();
            let last = run.state.records.last().unwrap();
            println!(
                "{:<5} seed {}  chamfer {:8.4} mm  fails {:>2}  iters {}  early {}  {:?}",
                strategy.as_str(),
                seed,
                last.chamfer_m * 1000.0,
                last.cumulative_failures,
                run.state.iterations_done(),
                run.completed_early,
                t0.elapsed()
            );
        }
    }
}
