//! Factorials, binomials and multiset index spaces.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

const FACT_TABLE_LEN: usize = 171;

fn fact_table() -> &'static [f64; FACT_TABLE_LEN] {
    static TABLE: OnceLock<[f64; FACT_TABLE_LEN]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [1.0; FACT_TABLE_LEN];
        for i in 1..FACT_TABLE_LEN {
            t[i] = t[i - 1] * i as f64;
        }
        t
    })
}

/// `n!` as a float (`inf` past 170).
pub fn factorial(n: usize) -> f64 {
    fact_table().get(n).copied().unwrap_or(f64::INFINITY)
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Number of weakly increasing `k`-tuples drawn from `d` symbols.
pub fn multichoose(d: usize, k: usize) -> usize {
    if k == 0 {
        return 1;
    }
    if d == 0 {
        return 0;
    }
    // C(d + k - 1, k) in exact integer arithmetic
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (d + i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// Number of distinct orderings of a sorted tuple: `n! / prod(k_i!)`.
pub fn multiplicity(tuple: &[usize]) -> f64 {
    let mut out = factorial(tuple.len());
    let mut run = 1usize;
    for w in tuple.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            out /= factorial(run);
            run = 1;
        }
    }
    if !tuple.is_empty() {
        out /= factorial(run);
    }
    out
}

/// Lexicographic rank of a weakly increasing tuple among all such tuples of
/// the same length over `dim` symbols.
pub fn lex_rank(dim: usize, tuple: &[usize]) -> usize {
    let n = tuple.len();
    let mut rank = 0;
    let mut prev = 0;
    for (j, &ij) in tuple.iter().enumerate() {
        for v in prev..ij {
            rank += multichoose(dim - v, n - j - 1);
        }
        prev = ij;
    }
    rank
}

/// All weakly increasing `rank`-tuples over `dim` symbols, in lexicographic
/// order, together with their multiplicities.
#[derive(Debug)]
pub struct IndexSpace {
    pub dim: usize,
    pub rank: usize,
    pub tuples: Vec<Vec<usize>>,
    pub mults: Vec<f64>,
}

impl IndexSpace {
    fn build(dim: usize, rank: usize) -> Self {
        let len = multichoose(dim, rank);
        let mut tuples = Vec::with_capacity(len);
        if dim > 0 || rank == 0 {
            let mut cur = vec![0usize; rank];
            loop {
                tuples.push(cur.clone());
                // advance to the next weakly increasing tuple
                let mut pos = rank;
                loop {
                    if pos == 0 {
                        break;
                    }
                    pos -= 1;
                    if cur[pos] + 1 < dim {
                        let v = cur[pos] + 1;
                        for c in cur.iter_mut().skip(pos) {
                            *c = v;
                        }
                        pos = usize::MAX;
                        break;
                    }
                }
                if pos != usize::MAX {
                    break;
                }
            }
        }
        debug_assert_eq!(tuples.len(), len);
        let mults = tuples.iter().map(|t| multiplicity(t)).collect();
        IndexSpace {
            dim,
            rank,
            tuples,
            mults,
        }
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }
}

type SpaceCache = RwLock<HashMap<(usize, usize), Arc<IndexSpace>>>;

/// Shared, lazily built index space for `(dim, rank)`.
pub fn index_space(dim: usize, rank: usize) -> Arc<IndexSpace> {
    static CACHE: OnceLock<SpaceCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(s) = cache.read().expect("index cache poisoned").get(&(dim, rank)) {
        return Arc::clone(s);
    }
    let space = Arc::new(IndexSpace::build(dim, rank));
    cache
        .write()
        .expect("index cache poisoned")
        .entry((dim, rank))
        .or_insert(space)
        .clone()
}

/// Merge two sorted tuples into one sorted tuple.
pub fn merge_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Calls `f(sub, rest)` for every way of splitting the sorted tuple `s` into
/// a sub-multiset of size `k` and its complement (both sorted). Each distinct
/// multiset split is visited once.
pub fn for_each_split<F: FnMut(&[usize], &[usize])>(s: &[usize], k: usize, mut f: F) {
    // run-length encode
    let mut syms: Vec<(usize, usize)> = Vec::new();
    for &v in s {
        match syms.last_mut() {
            Some((sym, c)) if *sym == v => *c += 1,
            _ => syms.push((v, 1)),
        }
    }
    let mut take = vec![0usize; syms.len()];
    fn rec<F: FnMut(&[usize], &[usize])>(
        syms: &[(usize, usize)],
        take: &mut Vec<usize>,
        pos: usize,
        remaining: usize,
        f: &mut F,
    ) {
        if pos == syms.len() {
            if remaining == 0 {
                let mut sub = Vec::new();
                let mut rest = Vec::new();
                for (&(sym, c), &t) in syms.iter().zip(take.iter()) {
                    sub.extend(std::iter::repeat(sym).take(t));
                    rest.extend(std::iter::repeat(sym).take(c - t));
                }
                f(&sub, &rest);
            }
            return;
        }
        let avail: usize = syms[pos..].iter().map(|&(_, c)| c).sum();
        if avail < remaining {
            return;
        }
        let (_, c) = syms[pos];
        for t in 0..=c.min(remaining) {
            take[pos] = t;
            rec(syms, take, pos + 1, remaining - t, f);
        }
        take[pos] = 0;
    }
    rec(&syms, &mut take, 0, k, &mut f);
}
