//! Test-only oracles and fixture builders, kept independent of the code
//! paths they check.
#![allow(dead_code, clippy::needless_range_loop)]

use chrono::DateTime;
use wordsync_core::game::{GameConfig, RoundPair, ValidationMode};
use wordsync_core::record::{GameRecord, PlayerSpec, RecordOutcome};
use wordsync_core::{EmbeddingSource, Seat, Word};

pub fn record(
    id: &str,
    a: &str,
    b: &str,
    rounds: &[(&str, &str)],
    outcome: RecordOutcome,
) -> GameRecord {
    let t = DateTime::from_timestamp(1_700_000_000, 0).unwrap();
    GameRecord {
        game_id: id.to_string(),
        player_a: PlayerSpec::llm(a),
        player_b: PlayerSpec::llm(b),
        config: GameConfig {
            validation_mode: ValidationMode::Off,
            ..GameConfig::default()
        },
        rounds: rounds
            .iter()
            .enumerate()
            .map(|(i, (wa, wb))| RoundPair {
                index: i as u32 + 1,
                word_a: Word::parse(wa).unwrap(),
                word_b: Word::parse(wb).unwrap(),
            })
            .collect(),
        outcome,
        started_at: t,
        finished_at: t,
        prompt_version: "test".to_string(),
        embedding_model_tag: None,
    }
}

/// Cyclic Jacobi eigenvalue iteration for a symmetric matrix. Returns
/// eigenvalues sorted descending with matching unit eigenvectors.
pub fn jacobi_eigen(matrix: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].partial_cmp(&a[i][i]).unwrap());
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order
        .iter()
        .map(|&col| (0..n).map(|row| v[row][col]).collect())
        .collect();
    (values, vectors)
}

/// Sample covariance with n - 1 in the denominator.
pub fn sample_covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len();
    let d = rows[0].len();
    let mean: Vec<f64> = (0..d)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    rows.iter()
                        .map(|r| (r[i] - mean[i]) * (r[j] - mean[j]))
                        .sum::<f64>()
                        / (n as f64 - 1.0)
                })
                .collect()
        })
        .collect()
}

fn dist(u: &[f64], v: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..u.len() {
        s += (u[i] - v[i]) * (u[i] - v[i]);
    }
    s.sqrt()
}

/// Naive recomputation of the strategy means: one explicit loop over
/// (game, seat, round). Returns (mean_prev, mean_avg, samples), each mean
/// being the average of per-sample means.
pub fn naive_strategy_means(
    games: &[GameRecord],
    model_id: &str,
    source: &dyn EmbeddingSource,
) -> (f64, f64, usize) {
    let mut per_prev = Vec::new();
    let mut per_avg = Vec::new();
    for g in games {
        if !matches!(g.outcome, RecordOutcome::Win { .. }) {
            continue;
        }
        for seat in [Seat::A, Seat::B] {
            let me = if seat == Seat::A { &g.player_a } else { &g.player_b };
            if me.model_id != model_id {
                continue;
            }
            let (mut sp, mut sa, mut n) = (0.0, 0.0, 0usize);
            for t in 1..g.rounds.len() {
                let e = |r: usize, s: Seat| {
                    source
                        .embedding(g.rounds[r].word(s).as_str())
                        .unwrap()
                        .values()
                        .to_vec()
                };
                let cur = e(t, seat);
                let own = e(t - 1, seat);
                let opp = e(t - 1, seat.other());
                let mid: Vec<f64> = own.iter().zip(&opp).map(|(a, b)| (a + b) / 2.0).collect();
                sp += dist(&cur, &opp);
                sa += dist(&cur, &mid);
                n += 1;
            }
            if n > 0 {
                per_prev.push(sp / n as f64);
                per_avg.push(sa / n as f64);
            }
        }
    }
    let k = per_prev.len();
    (
        per_prev.iter().sum::<f64>() / k as f64,
        per_avg.iter().sum::<f64>() / k as f64,
        k,
    )
}
