//! Seeded synthetic event process whose next state depends on neighbours.
//!
//! One `ChaCha8Rng` drives everything, in this order: Erdős–Rényi edges
//! (one `f64` per pair `i < j`, lexicographic), the initial class of each
//! node (`gen_range(0..d)`), then for every later step and every node one
//! `f64` draw `u`, plus one `gen_range(0..d)` when `u` selects noise.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{HostGraph, DEFAULT_CHEB_ORDER};
use crate::pipeline::EventDataset;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Topology {
    Ring,
    /// 4-neighbour lattice, row-major over `⌈√n⌉` columns.
    Grid,
    ErdosRenyi(f64),
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Topology::Ring => f.write_str("ring"),
            Topology::Grid => f.write_str("grid"),
            Topology::ErdosRenyi(p) => write!(f, "erdos-renyi:{p}"),
        }
    }
}

impl FromStr for Topology {
    type Err = Error;

    /// `ring`, `grid`, or `erdos-renyi:<p>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ring" => Ok(Topology::Ring),
            "grid" => Ok(Topology::Grid),
            _ => s
                .strip_prefix("erdos-renyi:")
                .and_then(|p| p.parse::<f64>().ok())
                .map(Topology::ErdosRenyi)
                .ok_or_else(|| Error::invalid(format!("unknown topology `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    pub topology: Topology,
    pub d: usize,
    /// Number of frames `T`.
    pub steps: usize,
    pub coupling: f64,
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n: 30,
            topology: Topology::Ring,
            d: 5,
            steps: 500,
            coupling: 0.9,
            noise: 0.1,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |p: f64| (0.0..=1.0).contains(&p);
        if !unit(self.coupling) || !unit(self.noise) || self.coupling + self.noise > 1.0 {
            return Err(Error::invalid(format!(
                "coupling ({}) and noise ({}) must be probabilities with coupling + noise <= 1",
                self.coupling, self.noise
            )));
        }
        if let Topology::ErdosRenyi(p) = self.topology {
            if !unit(p) {
                return Err(Error::invalid(format!("edge probability {p} outside [0, 1]")));
            }
        }
        if self.n == 0 || self.d < 2 || self.steps == 0 {
            return Err(Error::invalid("synth needs n >= 1, d >= 2 and T >= 1"));
        }
        Ok(())
    }
}

/// `1 − noise·(d−1)/d`.
pub fn bayes_rate(config: &SynthConfig) -> f64 {
    1.0 - config.noise * (config.d - 1) as f64 / config.d as f64
}

fn edges(config: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let n = config.n;
    match config.topology {
        Topology::Ring => match n {
            1 => Vec::new(),
            2 => vec![(0, 1)],
            _ => (0..n).map(|i| (i, (i + 1) % n)).collect(),
        },
        Topology::Grid => {
            let cols = crate::cells::grid_side(n);
            let mut out = Vec::new();
            for i in 0..n {
                if (i + 1) % cols != 0 && i + 1 < n {
                    out.push((i, i + 1));
                }
                if i + cols < n {
                    out.push((i, i + cols));
                }
            }
            out
        }
        Topology::ErdosRenyi(p) => {
            let mut out = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if rng.gen::<f64>() < p {
                        out.push((i, j));
                    }
                }
            }
            out
        }
    }
}

/// Most frequent class among `classes`, lowest index on ties.
fn modal_class(classes: impl Iterator<Item = usize>, d: usize) -> Option<usize> {
    let mut counts = vec![0usize; d];
    let mut any = false;
    for c in classes {
        counts[c] += 1;
        any = true;
    }
    any.then(|| {
        let best = *counts.iter().max().unwrap();
        counts.iter().position(|&c| c == best).unwrap()
    })
}

/// Generates the dataset; its graph carries the default Chebyshev order.
pub fn generate(config: &SynthConfig) -> Result<EventDataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let edge_list = edges(config, &mut rng);
    let ids: Vec<String> = (0..config.n).map(|i| format!("h{i}")).collect();
    let graph = HostGraph::from_index_edges(ids, &edge_list, DEFAULT_CHEB_ORDER)?;

    let mut neighbours = vec![Vec::new(); config.n];
    for &(a, b) in &edge_list {
        neighbours[a].push(b);
        neighbours[b].push(a);
    }
    let d = config.d;
    let mut frames: Vec<Vec<usize>> = Vec::with_capacity(config.steps);
    frames.push((0..config.n).map(|_| rng.gen_range(0..d)).collect());
    for _ in 1..config.steps {
        let prev = frames.last().unwrap();
        let next = (0..config.n)
            .map(|i| {
                let u: f64 = rng.gen();
                if u < config.coupling {
                    modal_class(neighbours[i].iter().map(|&j| prev[j]), d).map_or(prev[i], |m| (m + 1) % d)
                } else if u < config.coupling + config.noise {
                    rng.gen_range(0..d)
                } else {
                    prev[i]
                }
            })
            .collect();
        frames.push(next);
    }
    Ok(EventDataset {
        graph,
        vocabulary: (0..d as u64).collect(),
        frames,
        k_merge: 1,
        bayes_rate: Some(bayes_rate(config)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bayes_rate_closed_form() {
        let mut c = SynthConfig {
            noise: 0.0,
            coupling: 1.0,
            ..SynthConfig::default()
        };
        assert_eq!(bayes_rate(&c), 1.0);
        c.noise = 1.0;
        c.coupling = 0.0;
        c.d = 4;
        assert_eq!(bayes_rate(&c), 0.25);
        c.noise = 0.2;
        c.d = 5;
        assert!((bayes_rate(&c) - 0.84).abs() < 1e-15);
        assert!((bayes_rate(&SynthConfig::default()) - 0.92).abs() < 1e-15);
    }

    #[test]
    fn uncoupled_noiseless_series_are_constant() {
        let c = SynthConfig {
            coupling: 0.0,
            noise: 0.0,
            steps: 40,
            ..SynthConfig::default()
        };
        let ds = generate(&c).unwrap();
        for t in 1..ds.steps() {
            assert_eq!(ds.frames[t], ds.frames[0]);
        }
    }

    #[test]
    fn topologies() {
        let base = SynthConfig {
            n: 6,
            steps: 3,
            ..SynthConfig::default()
        };
        let ring = generate(&base).unwrap();
        assert_eq!(ring.graph.edges(), [(0, 1), (0, 5), (1, 2), (2, 3), (3, 4), (4, 5)]);
        let grid = generate(&SynthConfig {
            topology: Topology::Grid,
            ..base.clone()
        })
        .unwrap();
        // 3 columns: 0 1 2 / 3 4 5.
        assert_eq!(grid.graph.edges(), [(0, 1), (0, 3), (1, 2), (1, 4), (2, 5), (3, 4), (4, 5)]);
        let full = generate(&SynthConfig {
            topology: Topology::ErdosRenyi(1.0),
            ..base.clone()
        })
        .unwrap();
        assert_eq!(full.graph.edges().len(), 15);
        let empty = generate(&SynthConfig {
            topology: Topology::ErdosRenyi(0.0),
            ..base
        })
        .unwrap();
        assert!(empty.graph.edges().is_empty());
        assert_eq!("erdos-renyi:0.3".parse::<Topology>().unwrap(), Topology::ErdosRenyi(0.3));
        assert!("star".parse::<Topology>().is_err());
    }

    #[test]
    fn invalid_probabilities_are_rejected() {
        for (coupling, noise) in [(0.8, 0.3), (-0.1, 0.0), (0.0, 1.5)] {
            let c = SynthConfig {
                coupling,
                noise,
                ..SynthConfig::default()
            };
            assert!(generate(&c).is_err());
        }
    }

    #[test]
    fn modal_class_prefers_lowest_on_ties() {
        assert_eq!(modal_class([3, 1].into_iter(), 5), Some(1));
        assert_eq!(modal_class([3, 3, 1].into_iter(), 5), Some(3));
        assert_eq!(modal_class(std::iter::empty(), 5), None);
    }
}
