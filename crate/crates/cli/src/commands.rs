//! One function per experiment; each delegates to the library and records
//! sub-checks, witnesses and tables in a [`Report`].

use anyhow::{bail, Result};
use num_traits::{ToPrimitive, Zero};
use qmdyn::aperiodic::{
    approx_subgroup_check, delone_stats, skew_pi, skew_sample_check, twist_approx_check, twist_delone_check,
    TwistedSet,
};
use qmdyn::hull_lab::{
    decompose_mod3_rational, eta_window, find_shift_witness, generic_bits, generic_set, hull_walk, missing_factors,
    perturbation_qm, so_orbit_limit, so_window, tv_distance, BinarySetZ, EmpiricalMeasure, SetTwist, BASE_CHECK_RADIUS,
};
use qmdyn::qm::{act, defect};
use qmdyn::rational::{int, parse_rational, to_pq};
use qmdyn::rng::{sub_seed, SplitMix64};
use qmdyn::walk::{cesaro_series, drift_table, harmonic_residual, DEFAULT_SUPPORT_CAP};
use qmdyn::{fingerprint, rescale3, Error, Fingerprint, GroupSpec, Quasimorphism, Rational, ReducedWord};
use serde_json::{json, Value};
use std::sync::Arc;

use crate::config::{parse_set, Experiment, ExperimentConfig, OutputConfig, Variant};
use crate::report::{Report, Table};

/// Radius of the random targets in the generic-set experiment.
const TARGET_WINDOW: i64 = 5;
/// Largest shift `|g|` in seeded equivariance samples.
const MAX_SHIFT: usize = 2;
/// Separation threshold for the two Q3 chains.
const TV_THRESHOLD: f64 = 0.2;

/// Runs one experiment. `Err` means the configuration is unusable.
pub fn run(config: &ExperimentConfig) -> Result<Report> {
    if config.word_radius() == 0 {
        bail!("L must be at least 1");
    }
    let mut echo = config.clone();
    echo.output = OutputConfig::default();
    let mut params = serde_json::to_value(&echo)?;
    params.as_object_mut().expect("object").remove("output");
    let mut report = Report::new(config.experiment.name(), params);
    match config.experiment {
        Experiment::Defect => defect_cmd(config, &mut report)?,
        Experiment::Drift => drift_cmd(config, &mut report)?,
        Experiment::Harmonize => harmonize_cmd(config, &mut report)?,
        Experiment::HullWalk => hull_walk_cmd(config, &mut report)?,
        Experiment::GenericSet => generic_set_cmd(config, &mut report)?,
        Experiment::OrbitClosure => orbit_closure_cmd(config, &mut report)?,
        Experiment::ModelSet => model_set_cmd(config, &mut report)?,
        Experiment::ApproxCheck => approx_cmd(config, &mut report)?,
        Experiment::TwistCheck => twist_cmd(config, &mut report)?,
        Experiment::SkewCheck => skew_cmd(config, &mut report)?,
        Experiment::ExampleFinal => match config.params.variant.unwrap_or(Variant::Q3) {
            Variant::Q1 => q1_cmd(config, &mut report)?,
            Variant::Q2 => q2_cmd(config, &mut report)?,
            Variant::Q3 => q3_cmd(config, &mut report)?,
        },
    }
    Ok(report)
}

fn pq(r: &Rational) -> String {
    to_pq(r)
}

fn f64_of(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn fingerprint_table(name: &str, fp: &Fingerprint) -> Table {
    let mut t = Table::new(name, &["word", "value"]);
    for [w, v] in fp.csv_rows() {
        t.push(vec![w, v]);
    }
    t
}

fn histogram_table(name: &str, h: &EmpiricalMeasure) -> Table {
    let mut t = Table::new(name, &["key", "count"]);
    for [k, c] in h.csv_rows() {
        t.push(vec![k, c]);
    }
    t
}

fn is_antisymmetric_on(spec: &GroupSpec, f: &Quasimorphism, radius: usize) -> Result<bool> {
    Ok(spec.ball(radius)?.iter().all(|g| f.eval(&g.inv()) == -f.eval(g)))
}

fn defect_cmd(c: &ExperimentConfig, r: &mut Report) -> Result<()> {
    let (spec, f, radius) = (c.spec()?, c.quasimorphism()?, c.word_radius());
    let mut t = Table::new("defect", &["L", "D_L", "g", "h"]);
    let mut prev = Rational::zero();
    let mut monotone = true;
    for l in 1..=radius {
        let d = defect(&spec, &f, l)?;
        monotone &= d.value >= prev;
        prev = d.value.clone();
        t.push(vec![l.to_string(), pq(&d.value), d.argmax.0.to_dash_string(), d.argmax.1.to_dash_string()]);
        if l == radius {
            r.set("defect", pq(&d.value));
            r.set("argmax", json!([d.argmax.0.to_dash_string(), d.argmax.1.to_dash_string()]));
        }
    }
    r.require("monotone", monotone);
    r.tables.push(t);
    Ok(())
}

fn drift_cmd(c: &ExperimentConfig, r: &mut Report) -> Result<()> {
    let (spec, f, p) = (c.spec()?, c.quasimorphism()?, c.step_distribution()?);
    let table = drift_table(&f, &p, c.walk.n, DEFAULT_SUPPORT_CAP)?;
    let mut t = Table::new("drift", &["n", "d_n"]);
    for (n, d) in &table {
        t.push(vec![n.to_string(), pq(d)]);
    }
    let antisymmetric = is_antisymmetric_on(&spec, &f, 3)?;
    r.set("antisymmetric", antisymmetric);
    if antisymmetric {
        r.require("drift_vanishes", table.iter().all(|(_, d)| d.is_zero()));
    }
    if f.is_homomorphism() {
        let d = |n: usize| &table[n - 1].1;
        let additive = (1..=table.len()).all(|m| (1..=table.len() - m).all(|n| d(m + n) == &(d(m) + d(n))));
        r.require("additive", additive);
    }
    r.tables.push(t);
    Ok(())
}

/// Residual table for `psi_N`, `N` in the grid; returns the last `psi`.
fn harmonize_into(c: &ExperimentConfig, r: &mut Report, f: &Quasimorphism) -> Result<Fingerprint> {
    let p = c.step_distribution()?;
    let radius = c.word_radius();
    let series = cesaro_series(f, &p, &c.params.grid, radius + p.max_step(), DEFAULT_SUPPORT_CAP)?;
    let Some((_, last)) = series.last().cloned() else { bail!("empty Cesàro grid") };
    let mut t = Table::new("residual", &["N", "residual"]);
    let mut residuals = Vec::new();
    for (n, psi) in &series {
        let res = harmonic_residual(psi, &p, radius)?;
        t.push(vec![n.to_string(), pq(&res)]);
        residuals.push(res);
    }
    r.require("non_increasing", residuals.windows(2).all(|w| w[1] <= w[0]));
    if residuals.len() > 1 {
        r.require("decreased", residuals.last() < residuals.first());
    }
    r.tables.push(t);
    r.tables.push(fingerprint_table("psi", &last.restrict(radius)?));
    Ok(last)
}

fn harmonize_cmd(c: &ExperimentConfig, r: &mut Report) -> Result<()> {
    harmonize_into(c, r, &c.quasimorphism()?)?;
    Ok(())
}

fn hull_walk_cmd(c: &ExperimentConfig, r: &mut Report) -> Result<()> {
    let (f, p, radius) = (c.quasimorphism()?, c.step_distribution()?, c.word_radius());
    let h = hull_walk(&f, &p, c.walk.steps, radius, c.walk.seed)?;
    r.set("seed", c.walk.seed);
    r.set("steps", c.walk.steps);
    r.set("L", radius);
    r.set("keys", h.num_keys());
    r.require("complete", h.total() == c.walk.steps as u64);
    r.tables.push(histogram_table("histogram", &h));
    Ok(())
}

fn bits_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn generic_set_cmd(c: &ExperimentConfig, r: &mut Report) -> Result<()> {
    let k = c.generic_k();
    if k == 0 || k > 24 {
        bail!("K = {k} outside 1..=24");
    }
    let bits = generic_bits(k);
    let missing: Vec<Vec<bool>> = (1..=k).flat_map(|len| missing_factors(&bits, len)).collect();
    r.require("all_factors", missing.is_empty());
    r.witnesses.extend(missing.iter().map(|m| json!({ "missing": bits_string(m) })));
    let mut t = Table::new("bits", &["index", "bit"]);
    for (i, b) in bits.iter().enumerate() {
        t.push(vec![i.to_string(), u8::from(*b).to_string()]);
    }
    r.tables.push(t);
    r.set("length", bits.len());

    // seeded random targets on [-5, 5], matched inside a generic set that
    // holds every word of that length
    let set = generic_set((2 * TARGET_WINDOW + 1) as usize)?;
    let window: Vec<i64> = (-TARGET_WINDOW..=TARGET_WINDOW).collect();
    let mut rng = SplitMix64::new(c.walk.seed);
    let mut wt = Table::new("shift_witnesses", &["target", "k"]);
    let mut found = 0;
    for _ in 0..c.params.targets {
        let target_bits: Vec<bool> = window.iter().map(|_| rng.next_u64() >> 63 == 1).collect();
        let target = BinarySetZ::from_window_bits(TARGET_WINDOW, target_bits.clone())?;
        match find_shift_witness(&set, &target, &window) {
            Ok(k) => {
                found += 1;
                wt.push(vec![bits_string(&target_bits), k.to_string()]);
            }
            Err(Error::NotFound(_)) => r.witnesses.push(json!({ "unmatched_target": bits_string(&target_bits) })),
            Err(e) => return Err(e.into()),
        }
    }
    r.set("targets_matched", found);
    r.require("targets", found == c.params.targets);
    r.tables.push(wt);
    Ok(())
}

fn orbit_closure_cmd(c: &ExperimentConfig, r: &mut Report) -> Result<()> {
    let w = c.params.window;
    let k = c.generic_k();
    if w < 1 || k > 24 {
        bail!("need W >= 1 and K <= 24");
    }
    let target = parse_set(&c.params.set, w)?;
    let set = generic_set(k)?;
    r.set("target", target.describe());
    let witness = match so_orbit_limit(&set, &target, w) {
        Ok(found) => found,
        Err(Error::NotFound(msg)) => {
            r.require("found", false);
            r.witnesses.push(json!({ "reason": msg }));
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    let want = eta_window(&target, w)?;
    r.set("k", witness.k);
    r.require("matches_eta", witness.values == want);
    // (-k).s_o reproduces -eta(-B)
    let mirrored = so_window(&set, -witness.k, w)?;
    let ns: Vec<i64> = std::iter::once(0).chain((1..=w).flat_map(|n| [n, -n])).collect();
    let chi = |n: i64| -> Result<i64> { Ok(i64::from(target.contains(n)?)) };
    let mut mirror_ok = true;
    let mut t = Table::new("window", &["n", "k_shift", "eta_B", "minus_k_shift", "minus_eta_minus_B"]);
    for (i, &n) in ns.iter().enumerate() {
        let expect = -(chi(-n)? - chi(0)?);
        mirror_ok &= mirrored[i] == expect;
        t.push(vec![n.to_string(), witness.values[i].to_string(), want[i].to_string(), mirrored[i].to_string(), expect.to_string()]);
    }
    r.require("mirrored", mirror_ok);
    r.tables.push(t);
    r.witnesses.push(json!({ "k": witness.k }));
    Ok(())
}

fn model_set_cmd(c: &ExperimentConfig, r: &mut Report) -> Result<()> {
    let p = c.model()?;
    let radius = c.physical_radius()?;
    let points = p.enumerate(&radius);
    let mut t = Table::new("points", &["t"]);
    for x in &points {
        t.push(vec![x.to_string()]);
    }
    r.tables.push(t);
    r.set("count", points.len());
    match delone_stats(&points) {
        Ok(stats) => {
            r.set("min_gap", stats.min_gap.to_string());
            r.set("max_gap", stats.max_gap.to_string());
            r.require("delone", stats.min_gap.signum() > 0);
        }
        Err(Error::TooFewPoints { .. }) => r.require("delone", false),
        Err(e) => return Err(e.into()),
    }
    if p.has_symmetric_window() {
        let set = qmdyn::aperiodic::point_set(&points);
        r.require("symmetric", points.iter().all(|x| set.contains(&-x.clone())));
    }
    Ok(())
}

fn approx_cmd(c: &ExperimentConfig, r: &mut Report) -> Result<()> {
    let p = c.model()?;
    let report = approx_subgroup_check(&p, &c.physical_radius()?, &c.cover_radius()?)?;
    r.set("pairs_checked", report.pairs_checked);
    r.set("covering_size", report.covering.len());
    r.require("approximate_subgroup", report.ok);
    r.witnesses.extend(report.witnesses.iter().map(|(x, y)| json!({ "p": x.to_string(), "q": y.to_string() })));
    let mut t = Table::new("covering", &["f"]);
    for f in &report.covering {
        t.push(vec![f.to_string()]);
    }
    r.tables.push(t);
    Ok(())
}

fn twist_into(c: &ExperimentConfig, r: &mut Report, f: &Quasimorphism) -> Result<()> {
    let spec = c.spec()?;
    let t = TwistedSet::new(f.clone(), c.model()?);
    let radius = c.physical_radius()?;
    let approx = twist_approx_check(&spec, &t, c.word_radius(), &radius, &c.cover_radius()?)?;
    r.set("products_checked", approx.products_checked);
    r.set("defect_set", approx.defect_set.iter().map(pq).collect::<Vec<_>>());
    r.require("contains_identity", approx.contains_identity);
    r.require("symmetric", approx.symmetric);
    r.require("approximate_subgroup", approx.ok);
    r.witnesses.extend(approx.witnesses.iter().map(|(g1, t1, g2, t2)| {
        json!({ "g1": g1.to_dash_string(), "t1": t1.to_string(), "g2": g2.to_dash_string(), "t2": t2.to_string() })
    }));
    let delone = twist_delone_check(&spec, &t, c.params.fiber_radius, &radius)?;
    r.require("fibers_identical", delone.identical);
    r.set("min_gap", delone.base.min_gap.to_string());
    r.set("max_gap", delone.base.max_gap.to_string());
    let mut ft = Table::new("fibers", &["word", "min_gap", "max_gap"]);
    for fs in &delone.fibers {
        ft.push(vec![fs.word.to_dash_string(), fs.stats.min_gap.to_string(), fs.stats.max_gap.to_string()]);
    }
    r.tables.push(ft);
    Ok(())
}

fn twist_cmd(c: &ExperimentConfig, r: &mut Report) -> Result<()> {
    twist_into(c, r, &c.quasimorphism()?)
}

fn skew_into(c: &ExperimentConfig, r: &mut Report, fp: &Fingerprint, patch_radius: usize, max_shift: usize) -> Result<()> {
    let p = c.model()?;
    let radius = c.physical_radius()?;
    let sampled = skew_sample_check(fp, &p, max_shift, patch_radius, &radius, c.params.samples, c.walk.seed)?;
    r.set("samples", sampled.samples);
    r.require("equivariant", sampled.failures.is_empty());
    r.witnesses
        .extend(sampled.failures.iter().map(|(g, t)| json!({ "g": g.to_dash_string(), "t": t.to_string() })));
    let mut t = Table::new("patch", &["word", "t"]);
    for (g, x) in skew_pi(fp, &p, patch_radius, &radius)? {
        t.push(vec![g.to_dash_string(), x.to_string()]);
    }
    r.tables.push(t);
    Ok(())
}

fn skew_cmd(c: &ExperimentConfig, r: &mut Report) -> Result<()> {
    let (spec, f) = (c.spec()?, c.quasimorphism()?);
    let radius = c.word_radius();
    let fp = fingerprint(&spec, &f, radius + MAX_SHIFT)?;
    skew_into(c, r, &fp, radius, MAX_SHIFT)?;
    // separation of f from a.f on the patch window
    let a = ReducedWord::letter(1);
    let moved = fingerprint(&spec, &act(&a, &f), radius)?;
    let sep = qmdyn::aperiodic::separation_check(&fp.restrict(radius)?, &moved)?;
    r.set("separation_witness", sep.map(|g| g.to_dash_string()).map_or(Value::Null, Value::String));
    Ok(())
}

fn q1_cmd(c: &ExperimentConfig, r: &mut Report) -> Result<()> {
    let (spec, f, p) = (c.spec()?, c.quasimorphism()?, c.step_distribution()?);
    r.set("construction", "twist of the model set by the configured quasimorphism");
    let d = defect(&spec, &f, c.word_radius())?;
    r.set("defect", pq(&d.value));
    twist_into(c, r, &f)?;
    // the hull factor has no fixed point: the walk sees more than one key
    let h = hull_walk(&f, &p, c.walk.steps, 2, c.walk.seed)?;
    r.set("hull_keys", h.num_keys());
    r.require("hull_moves", h.num_keys() >= 2);
    r.tables.push(histogram_table("histogram", &h));
    Ok(())
}

fn q2_cmd(c: &ExperimentConfig, r: &mut Report) -> Result<()> {
    let f = c.quasimorphism()?;
    r.set("construction", "twist of the model set by the Cesàro harmonization of the configured quasimorphism");
    let psi = harmonize_into(c, r, &f)?;
    // psi lives on B_{L+1}; patches use B_{L+1-s} with shifts up to s
    let max_shift = MAX_SHIFT.min(psi.radius());
    let patch_radius = psi.radius() - max_shift;
    skew_into(c, r, &psi, patch_radius, max_shift)
}

fn q3_cmd(c: &ExperimentConfig, r: &mut Report) -> Result<()> {
    let (spec, p) = (c.spec()?, c.step_distribution()?);
    let base = rescale3(&c.quasimorphism()?);
    r.set("construction", "3 f + xi(A_q) o exp_1 with A_q a seeded Bernoulli(q) subset of the naturals");
    let radius = c.word_radius();
    let mut hists = Vec::new();
    for (i, q) in c.params.q_pair.iter().enumerate() {
        let q = parse_rational(q)?;
        let seed = sub_seed(c.walk.seed, i as u64);
        let set = Arc::new(BinarySetZ::bernoulli(q.clone(), seed, 0)?.nonnegative_part()?);
        let f = perturbation_qm(&spec, set, SetTwist::Xi, 1, &base, BASE_CHECK_RADIUS)?;
        // the 3Z part and the {-1, 0, 1} part separate exactly
        let split = spec.ball(3)?.iter().all(|g| {
            let v = f.eval(g);
            let (b, s) = decompose_mod3_rational(&v).expect("integer");
            b == base.eval(g) && int(s) + b == v
        });
        r.require(&format!("mod3_split_{i}"), split);
        let h = hull_walk(&f, &p, c.walk.steps, radius, seed)?;
        r.tables.push(histogram_table(&format!("histogram_{i}"), &h));
        hists.push((q, seed, h));
    }
    let beta = |h: &EmpiricalMeasure| {
        h.map_keys(|k| k.iter().map(|v| int(decompose_mod3_rational(v).expect("integer").1)).collect())
    };
    let tv = tv_distance(&hists[0].2, &hists[1].2)?;
    let tv_beta = tv_distance(&beta(&hists[0].2), &beta(&hists[1].2))?;
    r.set("seeds", hists.iter().map(|(_, s, _)| *s).collect::<Vec<_>>());
    r.set("tv", pq(&tv));
    r.set("tv_f64", f64_of(&tv));
    r.set("tv_beta", pq(&tv_beta));
    r.set("tv_beta_f64", f64_of(&tv_beta));
    r.set("threshold", TV_THRESHOLD);
    r.require("separated", f64_of(&tv_beta) >= TV_THRESHOLD);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use qmdyn::aperiodic::QuadExt;

    fn cfg(e: Experiment) -> ExperimentConfig {
        ExperimentConfig::new(e)
    }

    #[test]
    fn defect_matches_library() {
        let r = run(&cfg(Experiment::Defect)).unwrap();
        assert!(r.ok);
        let spec = GroupSpec::new(2).unwrap();
        let d = defect(&spec, &Quasimorphism::counting(spec.reduce(&[1, 2]).unwrap()), 4).unwrap();
        assert_eq!(r.summary["defect"], Value::String(pq(&d.value)));
        assert_eq!(r.table("defect").unwrap().rows.len(), 4);
    }

    #[test]
    fn drift_of_counting_is_zero() {
        let r = run(&cfg(Experiment::Drift)).unwrap();
        assert!(r.ok);
        assert!(r.table("drift").unwrap().rows.iter().all(|row| row[1] == "0/1"));
        let mut c = cfg(Experiment::Drift);
        c.qm.spec = "hom:1,2".into();
        c.walk.n = 4;
        let r = run(&c).unwrap();
        assert_eq!(r.summary["additive"], Value::Bool(true));
    }

    #[test]
    fn orbit_closure_small() {
        let mut c = cfg(Experiment::OrbitClosure);
        c.params.window = 3;
        c.params.set = "list:0,2".into();
        let r = run(&c).unwrap();
        assert!(r.ok, "{:?}", r.summary);
        c.params.generic_k = Some(2);
        let r = run(&c).unwrap();
        assert!(!r.ok);
    }

    #[test]
    fn model_set_summary() {
        let mut c = cfg(Experiment::ModelSet);
        c.model_set.radius = Some("10".into());
        let r = run(&c).unwrap();
        assert!(r.ok);
        assert_eq!(r.summary["min_gap"], Value::String(QuadExt::integer(1, 0, 2).to_string()));
        c.model_set.window = ["1".into(), "-1".into()];
        assert!(run(&c).is_err());
    }

    #[test]
    fn skew_check_passes() {
        let mut c = cfg(Experiment::SkewCheck);
        c.params.samples = 10;
        let r = run(&c).unwrap();
        assert!(r.ok);
        assert!(r.summary["separation_witness"].is_string());
        c.qm.spec = "hom:1,1".into();
        let r = run(&c).unwrap();
        assert!(r.summary["separation_witness"].is_null());
    }

    #[test]
    fn invalid_configs_error() {
        let mut c = cfg(Experiment::Defect);
        c.qm.spec = "counting:xyz".into();
        assert!(run(&c).is_err());
        let mut c = cfg(Experiment::Harmonize);
        c.params.grid = vec![4, 2];
        assert!(run(&c).is_err());
    }
}
