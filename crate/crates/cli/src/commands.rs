use std::f64::consts::PI;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use serde_json::{json, Value};

use timebell::admissibility::{check_data, check_model_with};
use timebell::inequalities::{ch_m, ch_sum, ch_sum_with_tolerance, chsh_s, chsh_s_with, ChshPairing, MC_SINGLES_SIGMAS};
use timebell::lhv::{
    estimate_with_errors, exact_time_averages_with, simulate_run_with, tally, LocalModel, MonteCarloEstimate, Quantity,
    SampleModel,
};
use timebell::oracle::{enumerate_strategies, mixture_consistency, verify_eq4_identity};
use timebell::qm::{qm_correlation_data, qm_outcome_probabilities};
use timebell::repro;
use timebell::worlds::world_report_with_tolerance;
use timebell::{ASetting, BSetting, CorrelationData, SettingsPair, SettingsQuad};

use crate::config::Scenario;
use crate::output::Report;

fn report(command: &'static str, sc: &Scenario, results: Value, annotations: Vec<String>) -> Result<Report> {
    Ok(Report {
        command,
        config_echo: serde_json::to_value(sc)?,
        results,
        annotations,
    })
}

fn local_model<'a>(sc: &'a Scenario, command: &str) -> Result<&'a SampleModel> {
    sc.local
        .as_ref()
        .ok_or_else(|| anyhow!("`{command}` needs a local model (malus, constant or clock); `qm` has no hidden-variable description"))
}

fn qm_rows(quad: &SettingsQuad) -> Value {
    let rows: Vec<Value> = SettingsPair::ALL
        .iter()
        .map(|&pair| {
            let (a, b) = quad.angles(pair);
            let [pp, pm, mp, mm] = qm_outcome_probabilities(a, b);
            json!({
                "pair": pair.label(),
                "a": a.radians(),
                "b": b.radians(),
                "p_pp": pp,
                "p_pm": pm,
                "p_mp": mp,
                "p_mm": mm,
                "expectation": pp + mm - pm - mp,
            })
        })
        .collect();
    Value::Array(rows)
}

pub fn qm_table(sc: &Scenario) -> Result<Report> {
    let quad = sc.settings_quad();
    if let Some(n) = sc.sweep {
        // Offsets station B against station A across [0, π/2].
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let offset = PI / 2.0 * i as f64 / (n - 1) as f64;
            let [a, ap, b, bp] = quad.to_radians();
            let q = SettingsQuad::new(a, ap, b + offset, bp + offset)?;
            let data = qm_correlation_data(&q);
            rows.push(json!({
                "offset": offset,
                "ch_sum": ch_sum(&data)?.value,
                "chsh_s": chsh_s(&data)?.value,
            }));
        }
        return report("qm-table", sc, json!({ "sweep": rows }), vec![]);
    }

    let data = qm_correlation_data(&quad);
    let results = json!({
        "settings": qm_rows(&quad),
        "singles": data.singles()?,
        "ch_sum": ch_sum(&data)?,
        "ch_m": ch_m(&data)?,
        "chsh": chsh_s(&data)?,
        "chsh_alternative_pairing": chsh_s_with(&data, ChshPairing::AsPrinted)?,
    });
    let annotations = vec![
        "chsh_alternative_pairing evaluates |E(α,β) − E(α′,β′)| + |E(α′,β′) + E(α′,β)|, a pairing that does not give 2√2 for the quantum prediction; chsh uses the standard pairing".into(),
    ];
    report("qm-table", sc, results, annotations)
}

fn z(estimate: f64, exact: f64, se: f64) -> f64 {
    if se > 0.0 {
        (estimate - exact) / se
    } else if estimate == exact {
        0.0
    } else {
        f64::INFINITY.copysign(estimate - exact)
    }
}

fn singles_tolerance(est: &MonteCarloEstimate) -> f64 {
    // Singles estimated at exactly 1/2 still carry sampling noise.
    MC_SINGLES_SIGMAS * est.singles_se.a_prime.max(est.singles_se.b).max(f64::EPSILON)
}

fn estimate_from_model(model: &SampleModel, sc: &Scenario, record: Option<&Path>) -> Result<(MonteCarloEstimate, Value)> {
    let run = simulate_run_with(model, &sc.schedule, &sc.simulation())?;
    if let Some(path) = record {
        let f = File::create(path).with_context(|| format!("cannot create record file {}", path.display()))?;
        run.write_records(BufWriter::new(f))
            .with_context(|| format!("cannot write record file {}", path.display()))?;
    }
    let counts = tally(&run);
    let est = estimate_with_errors(&counts)?;
    Ok((est, serde_json::to_value(counts)?))
}

pub fn simulate(sc: &Scenario, record: Option<&Path>) -> Result<Report> {
    let model = local_model(sc, "simulate")?;
    let (est, counts) = estimate_from_model(model, sc, record)?;
    let exact = exact_time_averages_with(model, &sc.schedule, &sc.quadrature())?;
    let data = &est.data;
    let (p, e) = (data.pair_probs()?, data.expectations()?);

    let pairs: Vec<Value> = SettingsPair::ALL
        .iter()
        .map(|&pair| {
            let p_exact = exact.factual(Quantity::PairProb(pair));
            let e_exact = exact.factual(Quantity::Expectation(pair));
            json!({
                "pair": pair.label(),
                "n": est.totals[pair],
                "p_ab": p[pair],
                "p_ab_se": est.pair_prob_se[pair],
                "p_ab_exact": p_exact,
                "p_ab_z": z(p[pair], p_exact, est.pair_prob_se[pair]),
                "expectation": e[pair],
                "expectation_se": est.expectation_se[pair],
                "expectation_exact": e_exact,
                "expectation_z": z(e[pair], e_exact, est.expectation_se[pair]),
            })
        })
        .collect();
    let s = data.singles()?;
    let sa = exact.factual(Quantity::SingleA(ASetting::AlphaPrime));
    let sb = exact.factual(Quantity::SingleB(BSetting::Beta));
    let singles = json!([
        { "single": "P_A[alpha_prime]", "value": s.a_prime, "se": est.singles_se.a_prime, "exact": sa, "z": z(s.a_prime, sa, est.singles_se.a_prime) },
        { "single": "P_B[beta]", "value": s.b, "se": est.singles_se.b, "exact": sb, "z": z(s.b, sb, est.singles_se.b) },
    ]);

    let mut annotations = Vec::new();
    let ch = match ch_sum_with_tolerance(data, singles_tolerance(&est)) {
        Ok(v) => serde_json::to_value(v)?,
        Err(err) => {
            annotations.push(format!("CH sum not evaluated: {err}; ch_m applies regardless"));
            Value::Null
        }
    };

    let results = json!({
        "run": {
            "model": model.name(),
            "seed": sc.seed,
            "n_pairs": sc.pairs,
            "emission": sc.emission,
            "time_dependent": model.is_time_dependent(),
        },
        "pairs": pairs,
        "singles": singles,
        "counts": counts,
        "ch_sum": ch,
        "ch_m": ch_m(data)?,
        "chsh": chsh_s(data)?,
    });
    report("simulate", sc, results, annotations)
}

pub fn worlds(sc: &Scenario) -> Result<Report> {
    let quad = sc.settings_quad();
    let (data, singles_tol, source): (CorrelationData, f64, Value) = match &sc.local {
        None => (qm_correlation_data(&quad), timebell::inequalities::ANALYTIC_SINGLES_TOL, json!("qm")),
        Some(model) => {
            let (est, _) = estimate_from_model(model, sc, None)?;
            let tol = singles_tolerance(&est);
            (
                est.data,
                tol,
                json!({ "model": model.name(), "seed": sc.seed, "n_pairs": sc.pairs }),
            )
        }
    };
    let mut reports = Vec::new();
    let mut annotations = Vec::new();
    for w in sc.worlds() {
        let r = world_report_with_tolerance(w, &data, &quad, singles_tol)?;
        annotations.extend(r.ch.annotations.iter().cloned());
        reports.push(r);
    }
    let summary: Vec<Value> = reports
        .iter()
        .map(|r| {
            json!({
                "world": r.world.tag().to_string(),
                "ch_value": r.ch_value,
                "ch_lower": r.ch_bounds.0,
                "ch_upper": r.ch_bounds.1,
                "ch_violated": r.ch_violated,
                "chsh_value": r.chsh_value,
                "chsh_bound": r.chsh_bound,
                "chsh_violated": r.chsh_violated,
            })
        })
        .collect();
    let results = json!({
        "source": source,
        "summary": summary,
        "worlds": reports,
    });
    report("worlds", sc, results, annotations)
}

pub fn oracle(sc: &Scenario) -> Result<Report> {
    let identity = verify_eq4_identity(sc.samples, sc.seed)?;
    let strategies = enumerate_strategies(&sc.settings_quad());
    let mut results = json!({
        "identity": identity,
        "corner_bounds_attained": identity.min_value == -1.0 && identity.max_value == 0.0,
        "strategies": strategies,
    });
    if let Some(model) = &sc.local {
        results["mixture"] = json!({
            "model": model.name(),
            "report": mixture_consistency(model, &sc.schedule, sc.resolution)?,
        });
    }
    report("oracle", sc, results, vec![])
}

pub fn admissibility(sc: &Scenario, data: Option<&Path>) -> Result<Report> {
    if data.is_some() {
        let refused = check_data(&qm_correlation_data(&sc.settings_quad())).unwrap_err();
        return Err(anyhow!("data-only input refused: {refused}"));
    }
    let model = sc.local.as_ref().ok_or_else(|| {
        anyhow!(
            "model `qm` refused: {}; choose malus, constant or clock",
            timebell::Error::DataOnlyAdmissibility
        )
    })?;
    let r = check_model_with(model, &sc.schedule, sc.tol, &sc.quadrature())?;
    let annotations = vec![r.criterion.clone()];
    report("admissibility", sc, serde_json::to_value(&r)?, annotations)
}

pub fn repro(sc: &Scenario) -> Result<(Report, bool)> {
    let outcomes = repro::run_all();
    let passed = outcomes.iter().filter(|c| c.passed).count();
    let all = passed == outcomes.len();
    let annotations = vec![format!("{passed}/{} checks passed", outcomes.len())];
    let r = report("repro", sc, json!({ "checks": outcomes }), annotations)?;
    Ok((r, all))
}
