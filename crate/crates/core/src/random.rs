//! Random networks and Dirichlet draws for synthetic experiments and tests.

use std::ops::RangeInclusive;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution as _, Gamma};

use crate::bn::{Distribution, Network, Structure, Variable};
use crate::scalar::Prob;

/// One draw from `Dirichlet(concentration)` via normalized gamma variates.
///
/// Entries with zero concentration are exactly zero. If every variate
/// underflows, the mass goes to the largest concentration.
pub fn dirichlet<R: Rng + ?Sized>(rng: &mut R, concentration: &[f64]) -> Vec<f64> {
    let mut draws: Vec<f64> = concentration
        .iter()
        .map(|&a| {
            if a > 0.0 {
                Gamma::new(a, 1.0).expect("positive shape").sample(rng)
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = draws.iter().sum();
    if total > 0.0 && total.is_finite() {
        draws.iter_mut().for_each(|d| *d /= total);
    } else {
        let best = concentration
            .iter()
            .enumerate()
            .fold(0, |b, (i, &a)| if a > concentration[b] { i } else { b });
        draws = vec![0.0; concentration.len()];
        draws[best] = 1.0;
    }
    draws
}

/// Random DAG with Dirichlet(1, ..., 1) CPT rows.
///
/// Variables are `X0..Xn` with states `s0..sm`; each variable draws up to
/// `max_parents` parents uniformly from the variables declared before it.
pub fn random_network<T: Prob, R: Rng + ?Sized>(
    rng: &mut R,
    name: &str,
    n_vars: RangeInclusive<usize>,
    states: RangeInclusive<usize>,
    max_parents: usize,
) -> Network<T> {
    let n = rng.random_range(n_vars);
    let mut variables = Vec::with_capacity(n);
    for i in 0..n {
        let m = rng.random_range(states.clone());
        let k = rng.random_range(0..=max_parents.min(i));
        let mut parents: Vec<usize> = sample(rng, i.max(1), k.min(i)).into_vec();
        parents.sort_unstable();
        variables.push(Variable::new(
            format!("X{i}"),
            (0..m).map(|s| format!("s{s}")),
            parents.into_iter().map(|p| format!("X{p}")),
        ));
    }
    let structure = Structure::new(variables).expect("parents precede children");
    random_parameters(rng, name, structure)
}

/// Fills a structure with Dirichlet(1, ..., 1) rows.
pub fn random_parameters<T: Prob, R: Rng + ?Sized>(rng: &mut R, name: &str, structure: Structure) -> Network<T> {
    let rows = (0..structure.len())
        .map(|id| {
            let m = structure.cardinality(id);
            (0..structure.row_count(id))
                .map(|_| to_distribution(&dirichlet(rng, &vec![1.0; m])))
                .collect()
        })
        .collect();
    Network::new(name, structure, rows).expect("rows match structure")
}

pub(crate) fn to_distribution<T: Prob>(row: &[f64]) -> Distribution<T> {
    let v: Vec<T> = row.iter().map(|&p| T::lit(p)).collect();
    let s: T = v.iter().copied().sum();
    Distribution::from_normalized(v.into_iter().map(|p| p / s).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_networks_are_valid_and_reproducible() {
        let a: Network<f64> = random_network(&mut ChaCha8Rng::seed_from_u64(3), "n", 5..=10, 2..=4, 3);
        let b: Network<f64> = random_network(&mut ChaCha8Rng::seed_from_u64(3), "n", 5..=10, 2..=4, 3);
        assert_eq!(a, b);
        assert!(crate::bn::validate(&a).is_empty());
        assert!((5..=10).contains(&a.structure().len()));
        for id in 0..a.structure().len() {
            assert!(a.structure().parents(id).len() <= 3);
        }
    }

    #[test]
    fn dirichlet_mean_tracks_concentration() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let alpha = [5.0, 15.0];
        let n = 4000;
        let mean: f64 = (0..n).map(|_| dirichlet(&mut rng, &alpha)[0]).sum::<f64>() / n as f64;
        // sd of a Beta(5, 15) is ~0.095; 4 standard errors of the mean
        assert!((mean - 0.25).abs() < 4.0 * 0.095 / (n as f64).sqrt());
        assert_eq!(dirichlet(&mut rng, &[0.0, 2.0])[0], 0.0);
    }
}
