use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::ReduceError;

/// Result of one predicate run on a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// The failure reproduces; the candidate is interesting.
    Fail,
    Pass,
    /// Could not tell (e.g. the candidate does not parse). Treated as `Pass`.
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reduction {
    /// Indices of the kept units, ascending.
    pub subset: Vec<usize>,
    /// Predicate runs actually performed.
    pub calls: usize,
    pub cache_hits: usize,
    /// False when the budget ran out before 1-minimality was established.
    pub minimal: bool,
}

struct Tester<F> {
    predicate: F,
    cache: HashMap<Vec<usize>, Outcome>,
    calls: usize,
    cache_hits: usize,
    budget: Option<usize>,
}

impl<F: FnMut(&[usize]) -> Outcome> Tester<F> {
    /// `None` when the budget forbids another run.
    fn fails(&mut self, subset: &[usize]) -> Option<bool> {
        if let Some(&o) = self.cache.get(subset) {
            self.cache_hits += 1;
            return Some(o == Outcome::Fail);
        }
        if self.budget.is_some_and(|b| self.calls >= b) {
            return None;
        }
        self.calls += 1;
        let o = (self.predicate)(subset);
        self.cache.insert(subset.to_vec(), o);
        Some(o == Outcome::Fail)
    }

    fn finish(&self, subset: Vec<usize>, minimal: bool) -> Reduction {
        Reduction {
            subset,
            calls: self.calls,
            cache_hits: self.cache_hits,
            minimal,
        }
    }
}

/// Contiguous chunks of `len / n` units; the last chunk takes the remainder.
pub fn split(units: &[usize], n: usize) -> Vec<Vec<usize>> {
    let n = n.clamp(1, units.len().max(1));
    let size = units.len() / n;
    (0..n)
        .map(|i| {
            let end = if i + 1 == n { units.len() } else { (i + 1) * size };
            units[i * size..end].to_vec()
        })
        .collect()
}

fn complement(units: &[usize], chunk: &[usize]) -> Vec<usize> {
    units.iter().copied().filter(|u| !chunk.contains(u)).collect()
}

/// Delta debugging over `n_units` units. The predicate sees ascending index
/// subsets and must report `Fail` on the full set. `budget` caps predicate
/// runs (cache hits are free).
pub fn ddmin<F>(n_units: usize, predicate: F, budget: Option<usize>) -> Result<Reduction, ReduceError>
where
    F: FnMut(&[usize]) -> Outcome,
{
    let mut t = Tester {
        predicate,
        cache: HashMap::new(),
        calls: 0,
        cache_hits: 0,
        budget,
    };
    let all: Vec<usize> = (0..n_units).collect();
    match t.fails(&all) {
        Some(true) => {}
        Some(false) => return Err(ReduceError::NotReproducible),
        None => {
            return Err(ReduceError::BudgetExhausted {
                best: t.finish(all, false),
            })
        }
    }
    let mut current = all;
    loop {
        match reduce_pass(&mut t, current) {
            Ok(c) => current = c,
            Err(best) => {
                return Err(ReduceError::BudgetExhausted {
                    best: t.finish(best, false),
                })
            }
        }
        // post-hoc 1-minimality check, mostly answered from the cache
        let mut shrunk = None;
        for i in 0..current.len() {
            let candidate = complement(&current, &current[i..=i]);
            match t.fails(&candidate) {
                Some(true) => {
                    shrunk = Some(candidate);
                    break;
                }
                Some(false) => {}
                None => {
                    return Err(ReduceError::BudgetExhausted {
                        best: t.finish(current, false),
                    })
                }
            }
        }
        match shrunk {
            Some(c) => current = c,
            None => return Ok(t.finish(current, true)),
        }
    }
}

/// One ddmin run to granularity `|current|`. `Err` carries the best failing
/// subset when the budget runs out.
fn reduce_pass<F>(t: &mut Tester<F>, mut current: Vec<usize>) -> Result<Vec<usize>, Vec<usize>>
where
    F: FnMut(&[usize]) -> Outcome,
{
    if current.is_empty() {
        return Ok(current);
    }
    match t.fails(&[]) {
        Some(true) => return Ok(Vec::new()),
        Some(false) => {}
        None => return Err(current),
    }
    let mut n = 2;
    while current.len() >= 2 {
        let chunks = split(&current, n);
        let mut next = None;
        for c in &chunks {
            match t.fails(c) {
                Some(true) => {
                    next = Some((c.clone(), 2));
                    break;
                }
                Some(false) => {}
                None => return Err(current),
            }
        }
        // with two chunks the complements are the chunks themselves
        if next.is_none() && chunks.len() > 2 {
            for c in &chunks {
                let comp = complement(&current, c);
                match t.fails(&comp) {
                    Some(true) => {
                        next = Some((comp, (n - 1).max(2)));
                        break;
                    }
                    Some(false) => {}
                    None => return Err(current),
                }
            }
        }
        match next {
            Some((c, k)) => {
                current = c;
                n = k;
            }
            None if n >= current.len() => break,
            None => n = (2 * n).min(current.len()),
        }
    }
    Ok(current)
}
