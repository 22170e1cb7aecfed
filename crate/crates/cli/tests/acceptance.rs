//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so every line is printed; exits nonzero
//! if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use percolab::bounds::{final_constant, iterate_bound, mass_from_lambda, ScaleInputs};
use percolab::graph::{BondGraph, Lattice, WeightedGraph};
use percolab::oracle::{
    deletion_contraction_tau, random_graph, random_instance, random_model_instance, Instance, Oracle,
    RandomGraphSpec,
};
use percolab::sampler::{components, estimate_tau, estimate_tau_row, sample_configuration};
use percolab::{LatticeBox, ModelParams, RngSeed, Runner, SplitPoint};
use percolab_cli::commands::{cmd_certify, fit};
use percolab_cli::config::Config;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn FnOnce() -> Outcome + 'a>);

fn workspace_file(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    if t > limit {
        return Err(format!("took {t:.1?}, limit {limit:?}"));
    }
    Ok(())
}

/// Independent reference: every bond configuration, components by flood
/// fill. `rows[i][s] = P(sources[i] <-> s)`.
fn brute_rows(sites: usize, edges: &[(usize, usize, f64)], sources: &[usize]) -> Vec<Vec<f64>> {
    assert!(edges.len() <= 20);
    let mut rows = vec![vec![0.0; sites]; sources.len()];
    let mut adj = vec![Vec::new(); sites];
    let mut comp = vec![usize::MAX; sites];
    let mut stack = Vec::new();
    for mask in 0u32..(1 << edges.len()) {
        let mut w = 1.0;
        adj.iter_mut().for_each(|a: &mut Vec<usize>| a.clear());
        for (i, &(a, b, p)) in edges.iter().enumerate() {
            if mask >> i & 1 == 1 {
                w *= p;
                adj[a].push(b);
                adj[b].push(a);
            } else {
                w *= 1.0 - p;
            }
        }
        if w == 0.0 {
            continue;
        }
        comp.iter_mut().for_each(|c| *c = usize::MAX);
        for s in 0..sites {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = s;
            stack.push(s);
            while let Some(u) = stack.pop() {
                for &v in &adj[u] {
                    if comp[v] == usize::MAX {
                        comp[v] = s;
                        stack.push(v);
                    }
                }
            }
        }
        for (row, &src) in rows.iter_mut().zip(sources) {
            for s in 0..sites {
                if comp[s] == comp[src] {
                    row[s] += w;
                }
            }
        }
    }
    rows
}

fn brute_tau(g: &WeightedGraph<f64>, x: usize, y: usize) -> f64 {
    brute_rows(g.sites(), g.edges(), &[x])[0][y]
}

/// Independent HSL right-hand side.
fn brute_hsl(inst: &Instance) -> (f64, f64) {
    let g = &inst.graph;
    let s = &inst.members;
    let full = brute_rows(g.sites(), g.edges(), &[inst.x, inst.y]);
    let inside: Vec<(usize, usize, f64)> = g.edges().iter().copied().filter(|&(a, b, _)| s[a] && s[b]).collect();
    let restricted = brute_rows(g.sites(), &inside, &[inst.x]);
    let mut rhs = 0.0;
    for &(a, b, p) in g.edges() {
        let (u, v) = match (s[a], s[b]) {
            (true, false) => (a, b),
            (false, true) => (b, a),
            _ => continue,
        };
        rhs += restricted[0][u] * p * full[1][v];
    }
    (full[0][inst.y], rhs)
}

/// Max-product path by relaxation to a fixed point.
fn brute_best_path(g: &WeightedGraph<f64>, x: usize, y: usize) -> f64 {
    let mut best = vec![0.0; g.sites()];
    best[x] = 1.0;
    loop {
        let mut changed = false;
        for &(a, b, p) in g.edges() {
            for (u, v) in [(a, b), (b, a)] {
                if best[u] * p > best[v] {
                    best[v] = best[u] * p;
                    changed = true;
                }
            }
        }
        if !changed {
            return best[y];
        }
    }
}

fn random_instances() -> Vec<Instance> {
    let oracle = Oracle::default();
    let mut out = Vec::new();
    for i in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x4853_4c00 + i);
        out.push(random_instance(&mut rng, &RandomGraphSpec::default(), format!("random-{i}")));
    }
    for i in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x4d4f_4400 + i);
        out.push(random_model_instance(&mut rng, &oracle, format!("model-{i}")).expect("within cap"));
    }
    out
}

fn mc_instances() -> Vec<Instance> {
    let spec = RandomGraphSpec { max_edges: 10, ..Default::default() };
    (0..20u64)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(0x4d43_0000 + i);
            random_instance(&mut rng, &spec, format!("mc-{i}"))
        })
        .collect()
}

fn c1_oracle() -> Outcome {
    let start = Instant::now();
    let o = Oracle::default();
    let (p, q) = (0.37f64, 0.81f64);
    let series = WeightedGraph::new(3, vec![(0, 1, p), (1, 2, q)]).map_err(|e| e.to_string())?;
    let parallel = WeightedGraph::new(4, vec![(0, 1, p), (1, 3, 1.0), (0, 2, q), (2, 3, 1.0)]).map_err(|e| e.to_string())?;
    let tri = WeightedGraph::new(3, vec![(0, 1, 0.5), (1, 2, 0.5), (0, 2, 0.5)]).map_err(|e| e.to_string())?;
    let cases = [
        ("series", o.exact_tau(&series, 0, 2).unwrap(), p * q),
        ("parallel", o.exact_tau(&parallel, 0, 3).unwrap(), p + q - p * q),
        ("triangle", o.exact_tau(&tri, 0, 2).unwrap(), 5.0 / 8.0),
    ];
    for (name, got, want) in cases {
        if (got - want).abs() > 1e-12 {
            return Err(format!("{name}: {got} vs closed form {want}"));
        }
    }
    let mut worst = 0.0f64;
    for i in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xdc00 + i);
        let g = random_graph(&mut rng, &RandomGraphSpec { max_edges: 12, ..Default::default() });
        let y = rng.random_range(0..g.sites());
        let enumerated = o.exact_tau(&g, 0, y).unwrap();
        let dc = deletion_contraction_tau(&g, 0, y).unwrap();
        let brute = brute_tau(&g, 0, y);
        worst = worst.max((enumerated - dc).abs()).max((enumerated - brute).abs());
    }
    if worst > 1e-12 {
        return Err(format!("enumeration vs deletion-contraction differ by {worst:e}"));
    }
    within(start, Duration::from_secs(10))?;
    Ok(format!("closed forms exact; 100 random graphs max |diff| {worst:.1e}"))
}

fn c2_mc_agreement(runner: &Runner) -> Outcome {
    let start = Instant::now();
    let o = Oracle::default();
    let mut agree = 0;
    let mut worst = 0.0f64;
    for (i, inst) in mc_instances().iter().enumerate() {
        let exact = o.exact_tau(&inst.graph, inst.x, inst.y).map_err(|e| e.to_string())?;
        let est = estimate_tau(&inst.graph, inst.x, inst.y, 100_000, 0xc2 + i as u64, runner).map_err(|e| e.to_string())?;
        let z = if est.stderr > 0.0 { (est.mean - exact).abs() / est.stderr } else if est.mean == exact { 0.0 } else { f64::INFINITY };
        worst = worst.max(z);
        if z <= 4.0 {
            agree += 1;
        }
    }
    within(start, Duration::from_secs(60))?;
    let msg = format!("{agree}/20 within 4 stderr (worst z = {worst:.2})");
    if agree >= 19 { Ok(msg) } else { Err(msg) }
}

fn c3_hsl(instances: &[Instance]) -> Outcome {
    let start = Instant::now();
    let o = Oracle::default();
    let mut worst = f64::INFINITY;
    for inst in instances {
        let r = o.check_hsl(&inst.graph, inst.x, inst.y, &inst.members).map_err(|e| format!("{}: {e}", inst.label))?;
        let (lhs, rhs) = brute_hsl(inst);
        if (r.lhs - lhs).abs() > 1e-12 || (r.rhs - rhs).abs() > 1e-12 {
            return Err(format!("{}: oracle ({}, {}) vs reference ({lhs}, {rhs})", inst.label, r.lhs, r.rhs));
        }
        if r.slack < -1e-12 || !r.holds {
            return Err(format!("{}: violation, slack {}", inst.label, r.slack));
        }
        worst = worst.min(r.slack);
    }
    within(start, Duration::from_secs(300))?;
    Ok(format!("{} instances, 0 violations, min slack {worst:.3e}", instances.len()))
}

fn c4_fkg(instances: &[Instance], runner: &Runner) -> Outcome {
    let o = Oracle::default();
    for inst in instances {
        let r = o.check_fkg_lower(&inst.graph, inst.x, inst.y).map_err(|e| e.to_string())?;
        let best = brute_best_path(&inst.graph, inst.x, inst.y);
        if (r.best_path_bound - best).abs() > 1e-12 || !r.holds {
            return Err(format!("{}: tau {} vs best path {best}", inst.label, r.tau));
        }
    }
    // simulation: every directly coupled pair
    let mut pairs = 0;
    for (i, inst) in mc_instances().iter().enumerate() {
        let g = &inst.graph;
        for s in 0..g.sites() {
            let row = estimate_tau_row(g, s, 100_000, 0xf4 + i as u64, runner).map_err(|e| e.to_string())?;
            for (t, p) in g.neighbors(s) {
                let e = row.estimate(t);
                pairs += 1;
                if e.mean + 4.0 * e.stderr < *p {
                    return Err(format!("{} ({s}, {t}): {} + 4*{} < {p}", inst.label, e.mean, e.stderr));
                }
            }
        }
    }
    for (k, d, beta) in [(0, 1, 0.1), (1, 1, 0.1), (1, 1, 0.3), (1, 2, 0.1)] {
        let p = ModelParams::new(k, d, 1.0, beta).unwrap();
        let bx = LatticeBox::centered(&vec![2; k], &vec![6; d]).unwrap();
        let lat = Lattice::new(bx, p).unwrap();
        let origin = lat.index_of(&SplitPoint::origin(k, d)).unwrap();
        let row = estimate_tau_row(&lat, origin, 100_000, 0xf400 + k as u64 * 10 + d as u64, runner).map_err(|e| e.to_string())?;
        let mut bad = None;
        lat.for_each_incident(origin, |v, pv, _| {
            let e = row.estimate(v);
            pairs += 1;
            if e.mean + 4.0 * e.stderr < pv {
                bad = Some(format!("lattice k={k} d={d}: site {}", lat.point(v)));
            }
        });
        if let Some(b) = bad {
            return Err(b);
        }
    }
    Ok(format!("{} exact instances, {pairs} simulated direct pairs, 0 violations", instances.len()))
}

fn c5_monotone() -> Outcome {
    let mut edges = 0;
    for i in 0..10u64 {
        let (k, d, short, long) = match i % 3 {
            0 => (0, 1, vec![], vec![20]),
            1 => (1, 1, vec![3], vec![8]),
            _ => (1, 2, vec![2], vec![3, 3]),
        };
        let bx = LatticeBox::centered(&short, &long).unwrap();
        let lo = Lattice::new(bx.clone(), ModelParams::new(k, d, 0.5 + 0.1 * i as f64, 0.1).unwrap()).unwrap();
        let hi = Lattice::new(bx, ModelParams::new(k, d, 0.5 + 0.1 * i as f64, 0.2).unwrap()).unwrap();
        let seed = RngSeed::new(0x5eed + i, i);
        let (a, b) = (sample_configuration(&lo, seed), sample_configuration(&hi, seed));
        if let Some(e) = a.open.iter().find(|e| !b.contains(e.0, e.1)) {
            return Err(format!("config {i}: edge {e:?} open at 0.1, closed at 0.2"));
        }
        let (ca, cb) = (components(&a), components(&b));
        if let Some(s) = (0..a.sites).find(|&s| !cb.same(s, ca.label(s))) {
            return Err(format!("config {i}: site {s} disconnected by raising beta"));
        }
        edges += a.open.len();
    }
    Ok(format!("10 configs, {edges} open edges at beta=0.1 all kept at 0.2, 0 violations"))
}

/// Independent evaluation of the iterated bound.
fn reference_iterate(s: &ScaleInputs<f64>, l: f64) -> f64 {
    if l <= s.l0 {
        return 1.0;
    }
    let q = s.d as f64 + s.epsilon;
    let mut n = (l / s.l0).log2().ceil() as i32;
    while l / 2f64.powi(n) > s.l0 {
        n += 1;
    }
    while n > 0 && l / 2f64.powi(n - 1) <= s.l0 {
        n -= 1;
    }
    let a = 2f64.powf(q) * 2.0 * s.beta * s.chi_m * s.chi_m;
    let r = s.alpha * 2f64.powf(q);
    let series: f64 = (0..n).map(|j| r.powi(j)).sum();
    a * series / (1.0 + l.powf(q)) + s.alpha.powi(n)
}

fn c6_multiscale() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6);
    let mut worst = f64::INFINITY;
    for _ in 0..20 {
        let d = rng.random_range(1..=3usize);
        let epsilon = rng.random_range(0.05..2.0);
        let q = d as f64 + epsilon;
        let s = ScaleInputs {
            alpha: rng.random_range(0.01..0.99) * 2f64.powf(-q),
            l0: rng.random_range(1.0..50.0),
            d,
            epsilon,
            beta: rng.random_range(0.0..1.0),
            chi_m: rng.random_range(1.0..20.0),
        };
        let c = final_constant(&s).map_err(|e| e.to_string())?;
        let c_ref = 2f64.powf(q) * 2.0 * s.beta * s.chi_m.powi(2) / (1.0 - s.alpha * 2f64.powf(q)) + 2.0 * (2.0 * s.l0).powf(q);
        if (c - c_ref).abs() > 1e-12 * c_ref {
            return Err(format!("C {c} vs closed form {c_ref}"));
        }
        for i in 0..200 {
            let l = s.l0 * (1.0 + 1e-6) * (1e6f64 / (1.0 + 1e-6)).powf(i as f64 / 199.0);
            let b = iterate_bound(&s, l).map_err(|e| e.to_string())?;
            let b_ref = reference_iterate(&s, l);
            if (b - b_ref).abs() > 1e-12 * b_ref.max(1e-300) {
                return Err(format!("iterate_bound({l}) = {b} vs reference {b_ref}"));
            }
            let v = b * (1.0 + l.powf(q));
            let slack = (c - v) / c;
            worst = worst.min(slack);
            if slack < -1e-9 {
                return Err(format!("{s:?}: L={l}: {v} > C={c}"));
            }
        }
    }
    let mut rt = 0.0f64;
    for (lambda, n0) in [(0.5, 1u64), (0.1, 3), (0.9, 7), (0.01, 2), (0.3, 12)] {
        for delta_frac in [0.1, 0.5, 0.9] {
            let delta = delta_frac * -f64::ln(lambda) / n0 as f64;
            let m = mass_from_lambda(lambda, n0, delta).map_err(|e| e.to_string())?;
            rt = rt.max(((-(m + delta)).exp() - lambda.powf(1.0 / n0 as f64)).abs());
        }
    }
    if rt > 1e-12 {
        return Err(format!("mass round trip error {rt:e}"));
    }
    Ok(format!("20 tuples x 200 L, min relative slack {worst:.3e}; mass round trip {rt:.1e}"))
}

fn c7_certify(runner: &Runner) -> Outcome {
    let start = Instant::now();
    let cfg = Config::load(&workspace_file("configs/certify_desk.toml")).map_err(|e| e.to_string())?;
    let p = cfg.params().unwrap();
    let bx = cfg.lattice_box().unwrap();
    if (p.k(), p.d(), p.epsilon(), p.beta(), bx.site_count(), cfg.n_samples) != (1, 1, 1.0, 0.05, 33 * 129, 200_000) {
        return Err("desk config does not match the criterion".into());
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let done = cmd_certify(&cfg, dir.path(), runner).map_err(|e| e.to_string())?;
    let c = &done.report.certificate;
    c.validate(p.exponent()).map_err(|e| e.to_string())?;
    // recompute the derived constants from the recorded inputs
    let q = p.exponent();
    let m_ref = -c.lambda.value.ln() / c.n0.value as f64 - c.delta.value;
    let c_ref = 2f64.powf(q) * 2.0 * p.beta() * c.chi_m.value.powi(2) / (1.0 - c.alpha.value * 2f64.powf(q))
        + 2.0 * (2.0 * c.l0.value).powf(q);
    if (c.m.value - m_ref).abs() > 1e-12 || (c.c.value - c_ref).abs() > 1e-9 * c_ref {
        return Err(format!("derived constants disagree: m {} vs {m_ref}, C {} vs {c_ref}", c.m.value, c.c.value));
    }
    for row in &done.check.rows {
        let (a, b) = {
            let y: SplitPoint = row.y.parse().unwrap();
            (y.short[0].unsigned_abs() as f64, y.long[0].unsigned_abs() as f64)
        };
        let bound = c.c.value * (-c.m.value * a).exp() / (1.0 + b.powf(q));
        if row.mean - 2.0 * row.stderr > bound * (1.0 + 1e-12) {
            return Err(format!("point {} exceeds the bound", row.y));
        }
    }
    if !dir.path().join("certificate.json").exists() {
        return Err("certificate.json missing".into());
    }
    within(start, Duration::from_secs(15 * 60))?;
    Ok(format!(
        "n0={} m={:.4} chi_m={:.4} L0={} C={:.3}; {}/{} points pass in {:.1?}",
        c.n0.value, c.m.value, c.chi_m.value, c.l0.value, c.c.value, done.check.passed, done.check.total, start.elapsed()
    ))
}

fn c8_long_exponent(runner: &Runner) -> Outcome {
    let start = Instant::now();
    let cfg = Config::load(&workspace_file("configs/fit_long.toml")).map_err(|e| e.to_string())?;
    let p = cfg.params().unwrap();
    let range = cfg.fit.as_ref().and_then(|f| f.long_range);
    if (p.k(), p.d(), p.epsilon(), p.beta(), cfg.n_samples, range) != (0, 1, 0.5, 0.1, 1_000_000, Some([8, 64])) {
        return Err("fit config does not match the criterion".into());
    }
    let (_, f) = fit(&cfg, runner).map_err(|e| e.to_string())?;
    let q = f.q_hat.ok_or("q was not fitted")?;
    within(start, Duration::from_secs(600))?;
    let msg = format!("q_hat = {q:.4} (target 1.5, window [1.3, 1.7]), {} points", f.window.points_used);
    if (1.3..=1.7).contains(&q) { Ok(msg) } else { Err(msg) }
}

fn c9_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_percolab");
    let config = workspace_file("configs/simulate.toml");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut bodies = Vec::new();
    for workers in ["1", "8"] {
        let out = dir.path().join(format!("w{workers}"));
        let status = Command::new(bin)
            .args(["simulate", "--workers", workers, "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!("workers {workers}: {}", String::from_utf8_lossy(&status.stderr)));
        }
        bodies.push(std::fs::read(out.join("simulate.csv")).map_err(|e| e.to_string())?);
    }
    if bodies[0] != bodies[1] {
        return Err("CSV payloads differ between --workers 1 and --workers 8".into());
    }
    Ok(format!("simulate.csv byte-identical ({} bytes)", bodies[0].len()))
}

fn main() -> ExitCode {
    let runner = Runner::default();
    let instances = random_instances();
    let criteria: Vec<Criterion<'_>> = vec![
        ("oracle correctness", Box::new(c1_oracle)),
        ("MC-oracle agreement", Box::new(|| c2_mc_agreement(&runner))),
        ("HSL inequality suite", Box::new(|| c3_hsl(&instances))),
        ("FKG lower bound suite", Box::new(|| c4_fkg(&instances, &runner))),
        ("monotonicity under shared randomness", Box::new(c5_monotone)),
        ("multi-scale machinery", Box::new(c6_multiscale)),
        ("desk-scale certificate", Box::new(|| c7_certify(&runner))),
        ("long-direction exponent", Box::new(|| c8_long_exponent(&runner))),
        ("determinism across workers", Box::new(c9_determinism)),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.into_iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(msg) => println!("acceptance {}: PASS {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("acceptance {}: FAIL {name}: {msg}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
