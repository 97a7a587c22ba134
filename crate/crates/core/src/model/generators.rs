//! Ground generators for the Job Search and Student Curriculum domains.
//!
//! Both are pure functions of their parameters; the RNG is ChaCha8 seeded
//! from `seed`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Connective, GraphicalModel, Literal, ModelBuilder};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct JobSearchParams {
    pub n_people: usize,
    /// Probability that a pair of people is linked in the social network.
    pub edge_prob: f64,
    pub weight_low: f64,
    pub weight_high: f64,
    /// Shared weight of the `Connected(x,y) ∧ TakesML(x) ⇒ TakesML(y)` rule.
    pub w3: f64,
    pub seed: u64,
}

impl Default for JobSearchParams {
    fn default() -> Self {
        JobSearchParams {
            n_people: 10,
            edge_prob: 0.1,
            weight_low: 0.0,
            weight_high: 3.0,
            w3: 1.0,
            seed: 0,
        }
    }
}

/// Variables `TakesML(x)`, `GetsJob(x)` per person and `Connected(x,y)`
/// (x < y) per linked pair. Features:
///
/// * `TakesML(x) ∧ GetsJob(x)` with a per-person weight,
/// * `¬TakesML(x) ∧ GetsJob(x)` with another per-person weight,
/// * for each linked pair, in both directions,
///   `¬Connected(x,y) ∨ ¬TakesML(x) ∨ TakesML(y)` with weight `w3`.
///
/// Pairs are kept with probability `edge_prob`; with `edge_prob = 1` every
/// pair is linked.
pub fn job_search<T: Scalar>(params: &JobSearchParams) -> GraphicalModel<T> {
    assert!(params.n_people >= 1, "need at least one person");
    assert!(
        (0.0..=1.0).contains(&params.edge_prob),
        "edge_prob must lie in [0, 1]"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut b = ModelBuilder::<T>::new();
    let n = params.n_people;

    let mut takes_ml = Vec::with_capacity(n);
    let mut gets_job = Vec::with_capacity(n);
    for x in 0..n {
        takes_ml.push(b.var(format!("TakesML({x})"), 2).expect("fresh name"));
        gets_job.push(b.var(format!("GetsJob({x})"), 2).expect("fresh name"));
    }

    let mut draw = || {
        if params.weight_high > params.weight_low {
            rng.gen_range(params.weight_low..params.weight_high)
        } else {
            params.weight_low
        }
    };
    let person_weights: Vec<(f64, f64)> = (0..n).map(|_| (draw(), draw())).collect();

    let mut pairs = Vec::new();
    for x in 0..n {
        for y in x + 1..n {
            if params.edge_prob >= 1.0 || rng.gen_bool(params.edge_prob) {
                pairs.push((x, y));
            }
        }
    }
    let connected: Vec<usize> = pairs
        .iter()
        .map(|(x, y)| b.var(format!("Connected({x},{y})"), 2).expect("fresh name"))
        .collect();

    for x in 0..n {
        let (w1, w2) = person_weights[x];
        b.feature(
            Connective::And,
            T::of(w1),
            vec![Literal::eq(takes_ml[x], 1), Literal::eq(gets_job[x], 1)],
        )
        .expect("valid feature");
        b.feature(
            Connective::And,
            T::of(w2),
            vec![Literal::eq(takes_ml[x], 0), Literal::eq(gets_job[x], 1)],
        )
        .expect("valid feature");
    }
    for (&(x, y), &c) in pairs.iter().zip(&connected) {
        for (from, to) in [(x, y), (y, x)] {
            b.feature(
                Connective::Or,
                T::of(params.w3),
                vec![
                    Literal::eq(c, 0),
                    Literal::eq(takes_ml[from], 0),
                    Literal::eq(takes_ml[to], 1),
                ],
            )
            .expect("valid feature");
        }
    }
    b.build()
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudentCurriculumParams {
    pub n_students: usize,
    /// Probability that a pair of students are friends (fixed structure).
    pub friend_prob: f64,
    /// Each student's four preference rows get distinct entries of this pool
    /// in random order.
    pub weight_pool: Vec<f64>,
    /// Shared weight of the friendship implications.
    pub w: f64,
    pub seed: u64,
}

impl Default for StudentCurriculumParams {
    fn default() -> Self {
        StudentCurriculumParams {
            n_students: 20,
            friend_prob: 0.05,
            weight_pool: vec![0.5, 1.0, 1.5, 2.0, 2.5],
            w: 0.5,
            seed: 0,
        }
    }
}

/// Variables `Maths(x)`, `CS(x)` per student. Each student gets one AND
/// feature per row of the `(Maths(x), CS(x))` table, rows ordered
/// `(1,1), (1,0), (0,1), (0,0)`. Each friend pair `x < y` adds
/// `Maths(x) ⇒ Maths(y)` and `CS(x) ⇒ CS(y)` with weight `w`.
pub fn student_curriculum<T: Scalar>(params: &StudentCurriculumParams) -> GraphicalModel<T> {
    assert!(params.n_students >= 1, "need at least one student");
    assert!(
        params.weight_pool.len() >= 4,
        "weight pool needs at least four entries"
    );
    assert!(
        (0.0..=1.0).contains(&params.friend_prob),
        "friend_prob must lie in [0, 1]"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut b = ModelBuilder::<T>::new();
    let n = params.n_students;

    let mut maths = Vec::with_capacity(n);
    let mut cs = Vec::with_capacity(n);
    for x in 0..n {
        maths.push(b.var(format!("Maths({x})"), 2).expect("fresh name"));
        cs.push(b.var(format!("CS({x})"), 2).expect("fresh name"));
    }

    const ROWS: [(usize, usize); 4] = [(1, 1), (1, 0), (0, 1), (0, 0)];
    for x in 0..n {
        let weights: Vec<f64> = params
            .weight_pool
            .choose_multiple(&mut rng, 4)
            .copied()
            .collect();
        for (&(m, c), &w) in ROWS.iter().zip(&weights) {
            b.feature(
                Connective::And,
                T::of(w),
                vec![Literal::eq(maths[x], m), Literal::eq(cs[x], c)],
            )
            .expect("valid feature");
        }
    }

    for x in 0..n {
        for y in x + 1..n {
            if params.friend_prob >= 1.0 || rng.gen_bool(params.friend_prob) {
                for course in [&maths, &cs] {
                    b.feature(
                        Connective::Or,
                        T::of(params.w),
                        vec![Literal::eq(course[x], 0), Literal::eq(course[y], 1)],
                    )
                    .expect("valid feature");
                }
            }
        }
    }
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn job_search_counts() {
        let one = job_search::<f64>(&JobSearchParams {
            n_people: 1,
            ..Default::default()
        });
        assert_eq!(one.num_vars(), 2);
        assert_eq!(one.features().len(), 2);

        let three = job_search::<f64>(&JobSearchParams {
            n_people: 3,
            edge_prob: 1.0,
            ..Default::default()
        });
        assert_eq!(three.num_vars(), 9);
        let person = three
            .features()
            .iter()
            .filter(|f| f.connective == Connective::And)
            .count();
        assert_eq!(person, 6);
        assert_eq!(three.features().len() - person, 6);
    }

    #[test]
    fn job_search_is_deterministic() {
        let p = JobSearchParams {
            n_people: 6,
            edge_prob: 0.5,
            seed: 42,
            ..Default::default()
        };
        assert_eq!(
            job_search::<f64>(&p).to_string(),
            job_search::<f64>(&p).to_string()
        );
        let q = JobSearchParams { seed: 43, ..p };
        assert_ne!(
            job_search::<f64>(&q).to_string(),
            job_search::<f64>(&JobSearchParams {
                seed: 42,
                ..q.clone()
            })
            .to_string()
        );
    }

    #[test]
    fn student_counts_and_weights() {
        let one = student_curriculum::<f64>(&StudentCurriculumParams {
            n_students: 1,
            ..Default::default()
        });
        assert_eq!(one.num_vars(), 2);
        assert_eq!(one.features().len(), 4);
        let mut ws: Vec<f64> = one.features().iter().map(|f| f.weight).collect();
        ws.sort_by(f64::total_cmp);
        ws.dedup();
        assert_eq!(ws.len(), 4, "rows draw distinct pool entries");

        let p = StudentCurriculumParams {
            n_students: 8,
            friend_prob: 0.3,
            seed: 9,
            ..Default::default()
        };
        assert_eq!(
            student_curriculum::<f64>(&p).to_string(),
            student_curriculum::<f64>(&p).to_string()
        );
    }

    #[test]
    fn generic_scalar_generation() {
        let m = job_search::<f32>(&JobSearchParams {
            n_people: 2,
            edge_prob: 1.0,
            ..Default::default()
        });
        assert_eq!(m.num_vars(), 5);
    }
}
