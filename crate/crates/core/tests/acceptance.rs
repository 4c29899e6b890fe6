//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use clubx_core::gadgets::check_reduction;
use clubx_core::gen::{mean_improvement, run_experiment, write_csv, ExperimentConfig};
use clubx_core::picef::brute_force_packing;
use clubx_core::rational::{self, int};
use clubx_core::*;
use common::*;
use rand::prelude::*;
use std::collections::HashSet;
use std::time::{Duration, Instant};

const SOLVE_LIMIT: Duration = Duration::from_secs(60);
const ILP_BUDGET: Duration = Duration::from_secs(60);
const CAPPED_BUDGET: Duration = Duration::from_secs(300);
const EXPERIMENT_BUDGET: Duration = Duration::from_secs(900);
const EXPERIMENT_JOBS: usize = 4;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn ilp_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(0x1001);
    let mut mismatches = 0;
    let mut statuses = [0usize; 2];
    for _ in 0..500 {
        let model = random_model(&mut rng);
        let exact = brute_force_solve(&model).unwrap();
        let got = solve(&model, SOLVE_LIMIT);
        let same = got.status == exact.status
            && (exact.status == SolveStatus::Infeasible || got.objective == exact.objective);
        if !same {
            mismatches += 1;
        }
        statuses[(exact.status == SolveStatus::Infeasible) as usize] += 1;
    }
    let elapsed = start.elapsed();
    check(
        mismatches == 0 && elapsed < ILP_BUDGET,
        format!(
            "500 models ({} feasible, {} infeasible), {mismatches} mismatches, {:.1}s (limit {}s)",
            statuses[0],
            statuses[1],
            elapsed.as_secs_f64(),
            ILP_BUDGET.as_secs()
        ),
    )
}

fn capped_oracle(schedules: &mut Vec<(Instance, FrameDag, Schedule)>) -> Outcome {
    let start = Instant::now();
    let mut rng = rng(0x2002);
    let mut mismatches = 0;
    let mut nonzero = 0;
    for _ in 0..200 {
        let instance = random_club_instance(&mut rng);
        let dag = random_total_order(&mut rng);
        let (best, _) = brute_force_capped(&instance, &dag);
        let got = solve_capped(&instance, &dag, SOLVE_LIMIT).unwrap();
        if !got.optimal || got.exact_objective != best {
            mismatches += 1;
        }
        if best > int(0) {
            nonzero += 1;
        }
        schedules.push((instance, dag, got.schedule));
    }
    let elapsed = start.elapsed();
    check(
        mismatches == 0 && elapsed < CAPPED_BUDGET,
        format!(
            "200 instances ({nonzero} with positive optimum), {mismatches} mismatches, {:.1}s (limit {}s)",
            elapsed.as_secs_f64(),
            CAPPED_BUDGET.as_secs()
        ),
    )
}

fn random_set_packing(rng: &mut impl Rng) -> SetPackingInstance {
    let universe: Vec<u32> = (1..=rng.gen_range(1..=5)).collect();
    let family = (0..rng.gen_range(0..=4))
        .map(|_| {
            let mut s: Vec<u32> = universe
                .iter()
                .copied()
                .filter(|_| rng.gen_bool(0.5))
                .collect();
            if s.is_empty() {
                s.push(*universe.choose(rng).unwrap());
            }
            s
        })
        .collect();
    SetPackingInstance::new(universe, family)
}

fn reduction() -> Outcome {
    let mut rng = rng(0x3003);
    let failures = (0..100)
        .filter(|_| !verify_reduction(&random_set_packing(&mut rng), SOLVE_LIMIT).unwrap())
        .count();
    let fig2: SetPackingInstance = load("fig2.json");
    let c = check_reduction(&fig2, SOLVE_LIMIT).unwrap();
    let fig2_ok = c.holds() && c.objective == int(22) && c.m == 8 && c.k == 2;
    check(
        failures == 0 && fig2_ok,
        format!(
            "100 random instances, {failures} failures; fixture objective={} M={} k={}",
            rational::Pretty(&c.objective),
            c.m,
            c.k
        ),
    )
}

fn standard_embedding() -> Outcome {
    let mut rng = rng(0x4004);
    let mut mismatches = 0;
    for _ in 0..100 {
        let pool = random_pool(&mut rng, 8);
        let clubs = solve_uncapped(&from_standard(&pool).unwrap(), SOLVE_LIMIT).unwrap();
        let graph = CompatGraph::from_pool(&pool).unwrap();
        let brute = brute_force_packing(&graph, None, None);
        let picef = solve_picef(&graph, 8, 8, SOLVE_LIMIT).unwrap();
        if !(clubs.optimal
            && picef.optimal
            && clubs.exact_objective == brute
            && picef.exact_objective == brute)
        {
            mismatches += 1;
        }
    }
    check(
        mismatches == 0,
        format!("100 pools up to 8 vertices, {mismatches} mismatches"),
    )
}

fn myopia(schedules: &mut Vec<(Instance, FrameDag, Schedule)>) -> Outcome {
    let pool: StandardPool = load("m_star_pool.json");
    let batch =
        standard_batch_value(&CompatGraph::from_pool(&pool).unwrap(), 2, SOLVE_LIMIT).unwrap();
    let instance: Instance = load("m_star.json");
    let dag: FrameDag = load("two_frames.json");
    let frames = solve_capped(&instance, &dag, SOLVE_LIMIT).unwrap();
    let ok = batch == 2.0 && frames.exact_objective == int(3) && frames.schedule.objective > batch;
    let detail = format!(
        "batch={batch} two-frame={}",
        rational::Pretty(&frames.exact_objective)
    );
    schedules.push((instance, dag, frames.schedule));
    check(ok, detail)
}

fn picef_oracle() -> Outcome {
    let mut rng = rng(0x6006);
    let mut mismatches = 0;
    let mut malformed = 0;
    for _ in 0..100 {
        let graph = random_graph(&mut rng, 8);
        let sol = solve_picef(&graph, 3, 4, SOLVE_LIMIT).unwrap();
        if !sol.optimal || sol.exact_objective != brute_force_packing(&graph, Some(3), Some(4)) {
            mismatches += 1;
        }
        let mut seen = HashSet::new();
        let disjoint = sol
            .cycles
            .iter()
            .chain(&sol.chains)
            .flatten()
            .all(|&v| seen.insert(v));
        let capped = sol.cycles.iter().all(|c| (2..=3).contains(&c.len()))
            && sol
                .chains
                .iter()
                .all(|c| (2..=5).contains(&c.len()) && graph.is_ndd(c[0]));
        if !(disjoint && capped) {
            malformed += 1;
        }
    }
    check(
        mismatches == 0 && malformed == 0,
        format!("100 graphs, {mismatches} value mismatches, {malformed} malformed decodes"),
    )
}

fn linearization_safety(schedules: &[(Instance, FrameDag, Schedule)]) -> Outcome {
    let unsafe_solver = schedules
        .iter()
        .filter(|(i, d, s)| {
            !validate_schedule(i, d, s, ValidationMode::AllLinearizations).is_empty()
        })
        .count();
    let mut rng = rng(0x7007);
    let (mut violations, mut accepted) = (0, 0);
    for k in 0..50 {
        let instance = random_club_instance(&mut rng);
        let dag = random_dag(&mut rng, 5);
        let schedule = if k % 2 == 0 {
            solve_capped(&instance, &dag, SOLVE_LIMIT).unwrap().schedule
        } else {
            random_schedule(&mut rng, &instance, &dag)
        };
        let all = validate_schedule(
            &instance,
            &dag,
            &schedule,
            ValidationMode::AllLinearizations,
        )
        .is_empty();
        let per =
            validate_schedule(&instance, &dag, &schedule, ValidationMode::PerFrame).is_empty();
        accepted += all as usize;
        if all && !per {
            violations += 1;
        }
    }
    check(
        unsafe_solver == 0 && violations == 0,
        format!(
            "{} solver schedules, {unsafe_solver} unsafe; 50 DAG schedules ({accepted} accepted), {violations} containment violations",
            schedules.len()
        ),
    )
}

fn experiment_csv() -> (Vec<u8>, Duration, Outcome) {
    let config = ExperimentConfig::default();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(EXPERIMENT_JOBS)
        .build()
        .unwrap();
    let start = Instant::now();
    let rows = pool.install(|| run_experiment(&config)).unwrap();
    let elapsed = start.elapsed();
    let mut csv = Vec::new();
    write_csv(&rows, &mut csv).unwrap();
    let below_1 = rows
        .iter()
        .filter(|r| r.frames_value_1don < r.standard_value)
        .count();
    let below_2 = rows
        .iter()
        .filter(|r| r.frames_value_2don < r.frames_value_1don)
        .count();
    let timed_out = rows.iter().filter(|r| r.timed_out).count();
    let mean_1 = mean_improvement(&rows, false).unwrap_or(f64::NAN);
    let mean_2 = mean_improvement(&rows, true).unwrap_or(f64::NAN);
    let pass = rows.len() == 40
        && below_1 == 0
        && below_2 == 0
        && mean_1 > 0.0
        && elapsed < EXPERIMENT_BUDGET;
    let detail = format!(
        "{} rows, dominance breaks {below_1}/{below_2}, mean improvement 1don {mean_1:.2}% 2don {mean_2:.2}%, {timed_out} rows without proof, {:.1}s at {EXPERIMENT_JOBS} jobs (limit {}s)",
        rows.len(),
        elapsed.as_secs_f64(),
        EXPERIMENT_BUDGET.as_secs()
    );
    (csv, elapsed, check(pass, detail))
}

fn main() {
    let mut results: Vec<(u8, &str, Outcome)> = Vec::new();
    let mut solved = Vec::new();
    results.push((1, "ilp oracle", ilp_oracle()));
    results.push((2, "capped oracle", capped_oracle(&mut solved)));
    results.push((3, "reduction soundness", reduction()));
    results.push((4, "standard embedding", standard_embedding()));
    results.push((5, "myopia", myopia(&mut solved)));
    results.push((6, "picef oracle", picef_oracle()));
    results.push((7, "linearization safety", linearization_safety(&solved)));
    let (first, _, trends) = experiment_csv();
    results.push((8, "experiment trends", trends));
    let (second, _, _) = experiment_csv();
    let same = first == second;
    results.push((
        9,
        "determinism",
        check(
            same,
            format!("two runs, {} CSV bytes, identical={same}", first.len()),
        ),
    ));

    let mut failed = 0;
    for (id, name, outcome) in &results {
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {id} {name}: {}", outcome.detail);
        failed += !outcome.pass as usize;
    }
    if failed > 0 {
        eprintln!("{failed} criteria failed");
        std::process::exit(1);
    }
}
