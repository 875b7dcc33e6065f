//! Small finite-domain constraint solver: depth-first search with
//! minimum-remaining-values ordering and forward checking.
//!
//! Domains are bitsets over the values `0..=63`. Constraints prune domains of
//! the variables they watch whenever one of those domains shrinks; search
//! stops at `limit` solutions or when the node budget runs out.

use std::collections::VecDeque;
use std::sync::Arc;

use rand::seq::SliceRandom;

use crate::problem::ProblemRng;

pub type Domain = u64;

pub const MAX_VALUE: u32 = 63;

/// Domain holding exactly `lo..=hi`.
pub fn range(lo: u32, hi: u32) -> Domain {
    assert!(lo <= hi && hi <= MAX_VALUE, "domain {lo}..={hi} out of bounds");
    let width = hi - lo + 1;
    let mask = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };
    mask << lo
}

pub fn single(value: u32) -> Domain {
    1u64 << value
}

fn values(d: Domain) -> impl Iterator<Item = u32> {
    let mut rest = d;
    std::iter::from_fn(move || {
        if rest == 0 {
            return None;
        }
        let v = rest.trailing_zeros();
        rest &= rest - 1;
        Some(v)
    })
}

fn is_single(d: Domain) -> bool {
    d != 0 && d & (d - 1) == 0
}

type Relation = Arc<dyn Fn(u32, u32) -> bool + Send + Sync>;
type Check = Arc<dyn Fn(&[u32]) -> bool + Send + Sync>;

enum Constraint {
    AllDifferent(Vec<usize>),
    /// `sum(coef * var) == target` with positive coefficients.
    Linear {
        vars: Vec<usize>,
        coefs: Vec<i64>,
        target: i64,
    },
    Binary {
        a: usize,
        b: usize,
        rel: Relation,
    },
    /// Arbitrary check over the assigned values, forward-checked once all
    /// but one variable are fixed.
    Predicate {
        vars: Vec<usize>,
        check: Check,
    },
}

impl Constraint {
    fn scope(&self) -> Vec<usize> {
        match self {
            Constraint::AllDifferent(vars) | Constraint::Linear { vars, .. } | Constraint::Predicate { vars, .. } => {
                vars.clone()
            }
            Constraint::Binary { a, b, .. } => vec![*a, *b],
        }
    }

    fn propagate(&self, domains: &mut [Domain], changed: &mut Vec<usize>) -> bool {
        match self {
            Constraint::AllDifferent(vars) => all_different(vars, domains, changed),
            Constraint::Linear { vars, coefs, target } => linear(vars, coefs, *target, domains, changed),
            Constraint::Binary { a, b, rel } => binary(*a, *b, rel.as_ref(), domains, changed),
            Constraint::Predicate { vars, check } => predicate(vars, check.as_ref(), domains, changed),
        }
    }

    fn holds(&self, assignment: &[u32]) -> bool {
        match self {
            Constraint::AllDifferent(vars) => {
                let mut seen = 0u64;
                vars.iter().all(|v| {
                    let bit = single(assignment[*v]);
                    let fresh = seen & bit == 0;
                    seen |= bit;
                    fresh
                })
            }
            Constraint::Linear { vars, coefs, target } => {
                vars.iter().zip(coefs).map(|(v, c)| c * assignment[*v] as i64).sum::<i64>() == *target
            }
            Constraint::Binary { a, b, rel } => rel(assignment[*a], assignment[*b]),
            Constraint::Predicate { vars, check } => {
                let vals: Vec<u32> = vars.iter().map(|v| assignment[*v]).collect();
                check(&vals)
            }
        }
    }
}

fn all_different(vars: &[usize], domains: &mut [Domain], changed: &mut Vec<usize>) -> bool {
    loop {
        let mut new_single = false;
        for &v in vars {
            let d = domains[v];
            if !is_single(d) {
                continue;
            }
            for &w in vars {
                if w != v && domains[w] & d != 0 {
                    domains[w] &= !d;
                    if domains[w] == 0 {
                        return false;
                    }
                    changed.push(w);
                    new_single |= is_single(domains[w]);
                }
            }
        }
        if !new_single {
            break;
        }
    }
    let union = vars.iter().fold(0u64, |acc, v| acc | domains[*v]);
    union.count_ones() as usize >= vars.len()
}

fn linear(vars: &[usize], coefs: &[i64], target: i64, domains: &mut [Domain], changed: &mut Vec<usize>) -> bool {
    let min = |d: Domain| d.trailing_zeros() as i64;
    let max = |d: Domain| 63 - d.leading_zeros() as i64;
    let lo: i64 = vars.iter().zip(coefs).map(|(v, c)| c * min(domains[*v])).sum();
    let hi: i64 = vars.iter().zip(coefs).map(|(v, c)| c * max(domains[*v])).sum();
    if target < lo || target > hi {
        return false;
    }
    for (&v, &c) in vars.iter().zip(coefs) {
        let d = domains[v];
        if is_single(d) {
            continue;
        }
        let floor = target - (hi - c * max(d));
        let ceil = target - (lo - c * min(d));
        let kept = values(d).filter(|x| (floor..=ceil).contains(&(c * *x as i64))).fold(0u64, |acc, x| acc | single(x));
        if kept != d {
            if kept == 0 {
                return false;
            }
            domains[v] = kept;
            changed.push(v);
        }
    }
    true
}

fn binary(
    a: usize,
    b: usize,
    rel: &(dyn Fn(u32, u32) -> bool + Send + Sync),
    domains: &mut [Domain],
    changed: &mut Vec<usize>,
) -> bool {
    let (da, db) = (domains[a], domains[b]);
    let new_a = values(da).filter(|x| values(db).any(|y| rel(*x, y))).fold(0u64, |acc, x| acc | single(x));
    if new_a == 0 {
        return false;
    }
    let new_b = values(db).filter(|y| values(new_a).any(|x| rel(x, *y))).fold(0u64, |acc, y| acc | single(y));
    if new_b == 0 {
        return false;
    }
    if new_a != da {
        domains[a] = new_a;
        changed.push(a);
    }
    if new_b != db {
        domains[b] = new_b;
        changed.push(b);
    }
    true
}

fn predicate(
    vars: &[usize],
    check: &(dyn Fn(&[u32]) -> bool + Send + Sync),
    domains: &mut [Domain],
    changed: &mut Vec<usize>,
) -> bool {
    let mut open = None;
    for (i, v) in vars.iter().enumerate() {
        if !is_single(domains[*v]) {
            if open.is_some() {
                return true;
            }
            open = Some(i);
        }
    }
    let mut vals: Vec<u32> = vars.iter().map(|v| domains[*v].trailing_zeros()).collect();
    match open {
        None => check(&vals),
        Some(i) => {
            let var = vars[i];
            let d = domains[var];
            let kept = values(d)
                .filter(|x| {
                    vals[i] = *x;
                    check(&vals)
                })
                .fold(0u64, |acc, x| acc | single(x));
            if kept == 0 {
                return false;
            }
            if kept != d {
                domains[var] = kept;
                changed.push(var);
            }
            true
        }
    }
}

/// Search ran out of node budget before finishing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BudgetExceeded;

/// Variables, their domains and constraints.
#[derive(Default)]
pub struct Model {
    domains: Vec<Domain>,
    constraints: Vec<Constraint>,
}

impl Model {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, domain: Domain) -> usize {
        self.domains.push(domain);
        self.domains.len() - 1
    }

    pub fn add_vars(&mut self, count: usize, domain: Domain) -> Vec<usize> {
        (0..count).map(|_| self.add_var(domain)).collect()
    }

    pub fn num_vars(&self) -> usize {
        self.domains.len()
    }

    /// Intersect a variable's domain. An empty result makes the model
    /// infeasible rather than panicking.
    pub fn restrict(&mut self, var: usize, domain: Domain) {
        self.domains[var] &= domain;
    }

    pub fn fix(&mut self, var: usize, value: u32) {
        self.restrict(var, single(value));
    }

    pub fn all_different(&mut self, vars: Vec<usize>) {
        self.constraints.push(Constraint::AllDifferent(vars));
    }

    pub fn sum_eq(&mut self, vars: Vec<usize>, target: i64) {
        let coefs = vec![1; vars.len()];
        self.weighted_sum_eq(vars, coefs, target);
    }

    pub fn weighted_sum_eq(&mut self, vars: Vec<usize>, coefs: Vec<i64>, target: i64) {
        assert_eq!(vars.len(), coefs.len());
        assert!(coefs.iter().all(|c| *c > 0), "coefficients must be positive");
        self.constraints.push(Constraint::Linear { vars, coefs, target });
    }

    pub fn binary(&mut self, a: usize, b: usize, rel: impl Fn(u32, u32) -> bool + Send + Sync + 'static) {
        self.constraints.push(Constraint::Binary { a, b, rel: Arc::new(rel) });
    }

    pub fn predicate(&mut self, vars: Vec<usize>, check: impl Fn(&[u32]) -> bool + Send + Sync + 'static) {
        self.constraints.push(Constraint::Predicate { vars, check: Arc::new(check) });
    }

    /// Up to `limit` solutions, in search order. With `rng`, value order is
    /// shuffled at each node (used by generators).
    pub fn solve(
        &self,
        limit: usize,
        budget: u64,
        rng: Option<&mut ProblemRng>,
    ) -> Result<Vec<Vec<u32>>, BudgetExceeded> {
        let mut watchers = vec![Vec::new(); self.domains.len()];
        for (i, c) in self.constraints.iter().enumerate() {
            for v in c.scope() {
                if !watchers[v].contains(&i) {
                    watchers[v].push(i);
                }
            }
        }
        let mut search = Search { model: self, watchers, limit, budget, nodes: 0, rng, found: Vec::new() };
        let mut domains = self.domains.clone();
        if limit == 0 || domains.contains(&0) {
            return Ok(Vec::new());
        }
        let all: Vec<usize> = (0..self.constraints.len()).collect();
        if search.propagate(&mut domains, &all) {
            search.dfs(domains)?;
        }
        Ok(search.found)
    }
}

struct Search<'m, 'r> {
    model: &'m Model,
    watchers: Vec<Vec<usize>>,
    limit: usize,
    budget: u64,
    nodes: u64,
    rng: Option<&'r mut ProblemRng>,
    found: Vec<Vec<u32>>,
}

impl Search<'_, '_> {
    fn propagate(&self, domains: &mut [Domain], seeds: &[usize]) -> bool {
        let constraints = &self.model.constraints;
        let mut queued = vec![false; constraints.len()];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &c in seeds {
            if !queued[c] {
                queued[c] = true;
                queue.push_back(c);
            }
        }
        let mut changed = Vec::new();
        while let Some(c) = queue.pop_front() {
            queued[c] = false;
            changed.clear();
            if !constraints[c].propagate(domains, &mut changed) {
                return false;
            }
            for v in changed.drain(..) {
                for &w in &self.watchers[v] {
                    if !queued[w] {
                        queued[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        true
    }

    /// Returns true once the solution limit is reached.
    fn dfs(&mut self, domains: Vec<Domain>) -> Result<bool, BudgetExceeded> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(BudgetExceeded);
        }
        let branch = domains
            .iter()
            .enumerate()
            .filter(|(_, d)| !is_single(**d))
            .min_by_key(|(i, d)| (d.count_ones(), *i))
            .map(|(i, _)| i);
        let Some(var) = branch else {
            let assignment: Vec<u32> = domains.iter().map(|d| d.trailing_zeros()).collect();
            if self.model.constraints.iter().all(|c| c.holds(&assignment)) {
                self.found.push(assignment);
            }
            return Ok(self.found.len() >= self.limit);
        };
        let mut order: Vec<u32> = values(domains[var]).collect();
        if let Some(rng) = self.rng.as_deref_mut() {
            order.shuffle(rng);
        }
        for value in order {
            let mut next = domains.clone();
            next[var] = single(value);
            let seeds = self.watchers[var].clone();
            if self.propagate(&mut next, &seeds) && self.dfs(next)? {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn latin(n: usize) -> Model {
        let mut m = Model::new();
        let cells = m.add_vars(n * n, range(1, n as u32));
        for i in 0..n {
            m.all_different((0..n).map(|j| cells[i * n + j]).collect());
            m.all_different((0..n).map(|j| cells[j * n + i]).collect());
        }
        m
    }

    #[test]
    fn counts_three_by_three_latin_squares() {
        assert_eq!(latin(3).solve(1000, u64::MAX, None).unwrap().len(), 12);
    }

    #[test]
    fn counts_eight_queens() {
        let n = 8;
        let mut m = Model::new();
        let rows = m.add_vars(n, range(0, n as u32 - 1));
        m.all_different(rows.clone());
        for i in 0..n {
            for j in i + 1..n {
                let gap = (j - i) as i64;
                m.binary(rows[i], rows[j], move |a, b| (a as i64 - b as i64).abs() != gap);
            }
        }
        assert_eq!(m.solve(1000, u64::MAX, None).unwrap().len(), 92);
    }

    #[test]
    fn weighted_sum_finds_all_subsets() {
        // 1 2 3 4 choose subset summing to 5: {1,4} and {2,3}
        let mut m = Model::new();
        let picks = m.add_vars(4, range(0, 1));
        m.weighted_sum_eq(picks, vec![1, 2, 3, 4], 5);
        assert_eq!(m.solve(10, u64::MAX, None).unwrap().len(), 2);
    }

    #[test]
    fn empty_domain_is_infeasible() {
        let mut m = Model::new();
        let v = m.add_var(range(1, 3));
        m.restrict(v, single(5));
        assert!(m.solve(1, 10, None).unwrap().is_empty());
    }

    #[test]
    fn budget_is_enforced() {
        assert_eq!(latin(6).solve(usize::MAX, 50, None), Err(BudgetExceeded));
    }

    #[test]
    fn shuffled_search_is_seed_deterministic() {
        let a = latin(5).solve(1, u64::MAX, Some(&mut ProblemRng::seed_from_u64(3))).unwrap();
        let b = latin(5).solve(1, u64::MAX, Some(&mut ProblemRng::seed_from_u64(3))).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn predicate_forward_checks_last_variable() {
        let mut m = Model::new();
        let v = m.add_vars(3, range(0, 1));
        m.fix(v[0], 1);
        m.fix(v[1], 1);
        m.predicate(v.clone(), |x| !(x[0] == x[1] && x[1] == x[2]));
        let sols = m.solve(10, u64::MAX, None).unwrap();
        assert_eq!(sols, vec![vec![1, 1, 0]]);
    }
}
