use lite_core::stability_bound;
use lite_harness::{parse_config, run_to_string};

fn mlp_config(family: &str, extra: &str) -> String {
    format!(
        "run.seed = 11\nrun.steps = 25\nrun.log_every = 5\nlandscape.kind = mlp\nlandscape.widths = 4, 8, 6, 2\n\
         landscape.batch_size = 16\noptimizer.family = {family}\nschedule.kind = cos\nschedule.lr = 0.02\n\
         schedule.warmup_steps = 5\n{extra}"
    )
}

fn momentum_config(eta: f64) -> String {
    format!(
        "run.seed = 0\nrun.steps = 3000\nrun.log_every = 100\nlandscape.kind = quadratic\n\
         landscape.eigenvalues = 10, 1, 0.1\noptimizer.family = momentum\noptimizer.alpha = 0.1\n\
         optimizer.beta = 1\nschedule.lr = {eta:e}\n"
    )
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

#[test]
fn identical_config_gives_identical_bytes() {
    let cfg = parse_config(&mlp_config("soap_lite", "lite.chi = 2\nlite.beta2 = 0.5\n")).unwrap();
    let (a, sa) = run_to_string(&cfg).unwrap();
    let (b, sb) = run_to_string(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(sa, sb);
    assert_eq!(sa.diverged_at, None);
}

#[test]
fn header_and_rows_have_fixed_width() {
    let cfg = parse_config(&mlp_config("muon_lite", "lite.chi = 3\n")).unwrap();
    let (csv, summary) = run_to_string(&cfg).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    let width = lines[0].split(',').count();
    // 4 leading columns, 6 blocks × 5 diagnostics
    assert_eq!(width, 4 + 6 * 5);
    assert!(lines[0].starts_with("step,lr,loss,global_grad_norm,layer0.bias.update_rms"));
    assert!(lines.iter().all(|l| l.split(',').count() == width));
    // steps 0, 5, 10, 15, 20 and the last one
    assert_eq!(column(&csv, "step"), ["0", "5", "10", "15", "20", "24"]);
    assert_eq!(summary.rows_written, 6);
    assert!(csv.ends_with('\n') && !csv.contains('\r'));
}

#[test]
fn lite_identity_matches_baseline_losses() {
    let base = run_to_string(&parse_config(&mlp_config("muon", "")).unwrap()).unwrap().0;
    let lite = run_to_string(&parse_config(&mlp_config("muon_lite", "lite.chi = 1\n")).unwrap()).unwrap().0;
    assert_eq!(column(&base, "loss"), column(&lite, "loss"));
    assert_eq!(column(&base, "layer1.weight.update_rms"), column(&lite, "layer1.weight.update_rms"));
}

#[test]
fn momentum_above_the_bound_diverges() {
    let bound = stability_bound(10.0, 0.1, 1.0).unwrap();
    let (csv, ok) = run_to_string(&parse_config(&momentum_config(0.99 * bound)).unwrap()).unwrap();
    assert_eq!(ok.diverged_at, None);
    assert!(ok.final_loss < 1e-3);
    assert!(csv.lines().count() > 1);

    let (csv, bad) = run_to_string(&parse_config(&momentum_config(1.5 * bound)).unwrap()).unwrap();
    let n = bad.diverged_at.expect("diverges");
    assert!(bad.line().contains(&format!("divergence at step {n}")));
    let last = csv.lines().last().unwrap();
    let fields: Vec<&str> = last.split(',').collect();
    assert_eq!(fields[0], n.to_string());
    assert!(!fields[2].parse::<f64>().unwrap().is_finite());
    assert_eq!(fields.len(), csv.lines().next().unwrap().split(',').count());
}

#[test]
fn weight_decay_instability_is_reported_as_divergence() {
    // |1 − lr·λ| > 1 makes the decoupled decay alone explode
    let text = "run.seed = 0\nrun.steps = 2000\nlandscape.kind = quadratic\nlandscape.eigenvalues = 1, 1\n\
                optimizer.family = adamw\noptimizer.weight_decay = 1\nschedule.lr = 3\n";
    let (_, s) = run_to_string(&parse_config(text).unwrap()).unwrap();
    assert!(s.diverged_at.is_some());
}

#[test]
fn every_landscape_kind_runs() {
    for land in [
        "landscape.kind = river_valley\nlandscape.sharp_dim = 3\nlandscape.flat_dim = 2\nlandscape.sharp_curvature = 50\n",
        "landscape.kind = kronecker\nlandscape.row_spectrum = 3, 2, 1\nlandscape.col_spectrum = 1, 0.5\n",
        "landscape.kind = quadratic\nlandscape.eigenvalues = 4, 2\nlandscape.offsets = 1, -1\nlandscape.init = 0.5\n",
    ] {
        let text = format!("run.seed = 2\nrun.steps = 10\n{land}optimizer.family = muon\nschedule.lr = 0.01\n");
        let (csv, s) = run_to_string(&parse_config(&text).unwrap()).unwrap();
        assert_eq!(s.diverged_at, None, "{land}");
        assert_eq!(csv.lines().count(), 11);
    }
}
