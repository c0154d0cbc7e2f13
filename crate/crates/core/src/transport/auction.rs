//! Forward auction with ε-scaling for the transportation problem between
//! `persons` (unit demand) and `sites` holding `capacity` identical slots.
//!
//! Benefits are integers `-(M+1)·round(Q |x−y|² / c_max)`, so a complete
//! assignment satisfying ε-complementary slackness at `ε = 1` is optimal for
//! the quantized costs. Persons only bid over a sparse candidate list; after
//! convergence every person is checked against every site and violators get
//! the missing arcs before the auction resumes.

use crate::error::{Error, Result};
use crate::geometry::Point;

const NONE: u32 = u32::MAX;
/// Candidate sites per person before the global check.
const CANDIDATES: usize = 16;
/// ε divisor between scaling phases.
const SCALE_STEP: i64 = 6;
/// Dense candidate lists below this many sites.
const DENSE_BELOW: usize = 48;
/// Rounds of arc insertion before giving up.
const MAX_GLOBAL_ROUNDS: usize = 64;

#[derive(Debug, Clone)]
pub(crate) struct TransportSolution {
    /// Mean squared distance of the matching.
    pub mean_cost: f64,
}

struct Quantizer {
    scale: f64,
    mult: i64,
}

impl Quantizer {
    fn new(persons: &[Point], sites: &[Point]) -> Self {
        let all: Vec<Point> = persons.iter().chain(sites.iter()).copied().collect();
        let bbox = crate::geometry::Aabb::bounding(&all).expect("nonempty");
        let cmax = bbox.extent().norm_squared();
        let mult = persons.len() as i64 + 1;
        let bits = 64 - (mult as u64).leading_zeros() as i32;
        let qbits = (55 - bits).clamp(8, 40);
        let q = (1u64 << qbits) as f64;
        Self {
            scale: if cmax > 0.0 { q / cmax } else { 0.0 },
            mult,
        }
    }

    fn benefit(&self, x: &Point, y: &Point) -> i64 {
        -((x - y).norm_squared() * self.scale).round() as i64 * self.mult
    }
}

struct Auction<'a> {
    persons: &'a [Point],
    sites: &'a [Point],
    capacity: usize,
    quant: Quantizer,
    arcs: Vec<Vec<(u32, i64)>>,
    prices: Vec<i64>,
    owner: Vec<u32>,
    slot_of: Vec<u32>,
    site_min: Vec<i64>,
    /// Largest cost on any candidate arc.
    span: i64,
}

impl<'a> Auction<'a> {
    fn new(persons: &'a [Point], sites: &'a [Point], capacity: usize) -> Self {
        let quant = Quantizer::new(persons, sites);
        let n_sites = sites.len();
        let k = if n_sites < DENSE_BELOW { n_sites } else { CANDIDATES.min(n_sites) };
        let mut scratch: Vec<(f64, u32)> = Vec::with_capacity(n_sites);
        let arcs: Vec<Vec<(u32, i64)>> = persons
            .iter()
            .enumerate()
            .map(|(i, x)| {
                scratch.clear();
                scratch.extend(sites.iter().enumerate().map(|(j, y)| ((x - y).norm_squared(), j as u32)));
                if k < n_sites {
                    scratch.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                    scratch.truncate(k);
                }
                let mut list: Vec<(u32, i64)> = scratch.iter().map(|&(_, j)| (j, quant.benefit(x, &sites[j as usize]))).collect();
                // guarantees a complete assignment inside the candidate graph
                let home = (i / capacity) as u32;
                if !list.iter().any(|&(j, _)| j == home) {
                    list.push((home, quant.benefit(x, &sites[home as usize])));
                }
                list.sort_unstable_by_key(|&(j, _)| j);
                list
            })
            .collect();
        let span = arcs.iter().flatten().map(|&(_, a): &(u32, i64)| -a).max().unwrap_or(0);
        Self {
            persons,
            sites,
            span,
            capacity,
            quant,
            arcs,
            prices: vec![0; n_sites * capacity],
            owner: vec![NONE; n_sites * capacity],
            slot_of: vec![NONE; persons.len()],
            site_min: vec![0; n_sites],
        }
    }

    fn slots(&self, j: usize) -> std::ops::Range<usize> {
        j * self.capacity..(j + 1) * self.capacity
    }

    /// Cheapest slot of site `j` and the second-cheapest price.
    fn two_cheapest(&self, j: usize) -> (usize, i64) {
        let mut best = usize::MAX;
        let mut p1 = i64::MAX;
        let mut p2 = i64::MAX;
        for s in self.slots(j) {
            let p = self.prices[s];
            if p < p1 {
                p2 = p1;
                p1 = p;
                best = s;
            } else if p < p2 {
                p2 = p;
            }
        }
        (best, p2)
    }

    fn run(&mut self, eps: i64, queue: &mut std::collections::VecDeque<u32>) {
        while let Some(i) = queue.pop_front() {
            let i = i as usize;
            let mut v1 = i64::MIN;
            let mut v2 = i64::MIN;
            let mut j1 = usize::MAX;
            for &(j, a) in &self.arcs[i] {
                let v = a - self.site_min[j as usize];
                if v > v1 {
                    v2 = v1;
                    v1 = v;
                    j1 = j as usize;
                } else if v > v2 {
                    v2 = v;
                }
            }
            let (slot, second_price) = self.two_cheapest(j1);
            if second_price != i64::MAX {
                let a1 = v1 + self.site_min[j1];
                v2 = v2.max(a1 - second_price);
            }
            let increment = if v2 == i64::MIN { self.span + eps } else { v1 - v2 + eps };
            self.prices[slot] += increment;
            let prev = self.owner[slot];
            self.owner[slot] = i as u32;
            self.slot_of[i] = slot as u32;
            if prev != NONE {
                self.slot_of[prev as usize] = NONE;
                queue.push_back(prev);
            }
            self.site_min[j1] = self.slots(j1).map(|s| self.prices[s]).min().unwrap();
        }
    }

    /// ε-scaling phases from `eps0` down to 1; prices carry over.
    fn scale_down(&mut self, eps0: i64, queue: &mut std::collections::VecDeque<u32>) {
        let mut eps = eps0;
        loop {
            self.owner.iter_mut().for_each(|o| *o = NONE);
            self.slot_of.iter_mut().for_each(|s| *s = NONE);
            queue.clear();
            queue.extend(0..self.persons.len() as u32);
            self.run(eps, queue);
            if eps == 1 {
                return;
            }
            eps = (eps / SCALE_STEP).max(1);
        }
    }

    /// Persons whose assignment is not within 1 of their best site over the
    /// full bipartite graph, with the sites that beat it.
    fn violators(&self) -> Vec<(usize, Vec<u32>)> {
        let mut out = Vec::new();
        for i in 0..self.persons.len() {
            let slot = self.slot_of[i] as usize;
            let j = slot / self.capacity;
            let x = &self.persons[i];
            let own = self.quant.benefit(x, &self.sites[j]) - self.prices[slot];
            let missing: Vec<u32> = (0..self.sites.len())
                .filter(|&k| self.quant.benefit(x, &self.sites[k]) - self.site_min[k] > own + 1)
                .map(|k| k as u32)
                .collect();
            if !missing.is_empty() {
                out.push((i, missing));
            }
        }
        out
    }

    fn solve(&mut self) -> Result<()> {
        let eps0 = (self.span / 4).max(1);
        let mut queue = std::collections::VecDeque::with_capacity(self.persons.len());
        self.scale_down(eps0, &mut queue);
        // a complete ε = 1 assignment is only optimal if slackness holds on
        // every arc; missing arcs are added and the scaling is rerun
        for _ in 0..MAX_GLOBAL_ROUNDS {
            let violators = self.violators();
            if violators.is_empty() {
                return Ok(());
            }
            for (i, missing) in violators {
                // every site at least as close as the farthest missing one,
                // so ties among duplicated sites arrive together
                let x = self.persons[i];
                let reach = missing.iter().map(|&k| (x - self.sites[k as usize]).norm_squared()).fold(0.0, f64::max);
                let ball: Vec<u32> = (0..self.sites.len() as u32)
                    .filter(|&k| (x - self.sites[k as usize]).norm_squared() <= reach)
                    .collect();
                for k in ball {
                    if let Err(pos) = self.arcs[i].binary_search_by_key(&k, |&(j, _)| j) {
                        let a = self.quant.benefit(&self.persons[i], &self.sites[k as usize]);
                        self.arcs[i].insert(pos, (k, a));
                    }
                }
            }
            self.scale_down(eps0, &mut queue);
        }
        Err(Error::Solver("auction did not satisfy global slackness".into()))
    }
}

/// Optimal matching of `persons` onto `sites`, each site taking exactly
/// `persons.len() / sites.len()` persons.
pub(crate) fn solve_transport(persons: &[Point], sites: &[Point]) -> Result<TransportSolution> {
    if sites.is_empty() || !persons.len().is_multiple_of(sites.len()) {
        return Err(Error::WeightMismatch(format!(
            "{} persons cannot fill {} sites evenly",
            persons.len(),
            sites.len()
        )));
    }
    let capacity = persons.len() / sites.len();
    let mut auction = Auction::new(persons, sites, capacity);
    auction.solve()?;
    let costs: Vec<f64> = persons
        .iter()
        .zip(&auction.slot_of)
        .map(|(x, &s)| (x - sites[s as usize / capacity]).norm_squared())
        .collect();
    let mean_cost = crate::geometry::pairwise_sum(&costs) / persons.len() as f64;
    Ok(TransportSolution { mean_cost })
}
