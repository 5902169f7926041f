//! Partition-valued reference simulator.
//!
//! Tracks actual blocks of labels `1..=n` instead of counts: wait `Exp(λ_b)`,
//! draw a merger size from the full rate table, pick that many blocks
//! uniformly, merge. Slow (O(n) per event) and meant only as ground truth for
//! the count-based fast path at small `n`. It shares no sampling code with
//! the fast path: merger sizes come from [`MergerRateTable::sample_size`],
//! total rates from the table's term-by-term sum and singleton losses from
//! the actual blocks.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::rates::{AlphaParam, MergerRateTable};
use crate::{Error, Result};

/// A partition of `{1, …, n}` at some coalescent time.
///
/// Blocks are sorted, and kept ordered by their smallest label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionState {
    pub blocks: Vec<Vec<u32>>,
    pub time: f64,
}

impl PartitionState {
    pub fn singletons(n: u32) -> Self {
        Self {
            blocks: (1..=n).map(|i| vec![i]).collect(),
            time: 0.0,
        }
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// True when the blocks are disjoint, non-empty and cover `1..=n`.
    pub fn is_partition_of(&self, n: u32) -> bool {
        let mut seen = vec![false; n as usize + 1];
        for block in &self.blocks {
            if block.is_empty() {
                return false;
            }
            for &label in block {
                if label == 0 || label > n || std::mem::replace(&mut seen[label as usize], true) {
                    return false;
                }
            }
        }
        seen[1..].iter().all(|&s| s)
    }

    /// Merge the blocks at `indices`; the merged block takes the slot of the
    /// block with the smallest label.
    fn merge(&mut self, indices: &mut [usize]) {
        indices.sort_unstable();
        let target = indices[0];
        let mut merged = std::mem::take(&mut self.blocks[target]);
        for &i in &indices[1..] {
            merged.append(&mut self.blocks[i]);
        }
        merged.sort_unstable();
        self.blocks[target] = merged;
        self.blocks.retain(|b| !b.is_empty());
    }
}

/// Number of singleton blocks `{i}`.
pub fn external_count(state: &PartitionState) -> usize {
    state.blocks.iter().filter(|b| b.len() == 1).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionRun {
    pub n: u32,
    pub tau: usize,
    pub total_length: f64,
    pub external_length: f64,
    /// Block counts `X_0 ..= X_τ`.
    pub x: Vec<u64>,
    /// Singleton counts `Y_0 ..= Y_τ`.
    pub y: Vec<u64>,
    /// `Π_0 ..= Π_τ`, present when requested.
    pub history: Option<Vec<PartitionState>>,
}

impl PartitionRun {
    /// Merger sizes `U_k = X_{k−1} − X_k + 1`.
    pub fn merger_sizes(&self) -> Vec<u64> {
        self.x.windows(2).map(|w| w[0] - w[1] + 1).collect()
    }
}

/// Per-block-count rate tables, built on first use.
#[derive(Debug, Clone)]
pub struct OracleTables {
    alpha: AlphaParam,
    tables: Vec<Option<MergerRateTable>>,
}

impl OracleTables {
    pub fn new(alpha: AlphaParam) -> Self {
        Self {
            alpha,
            tables: Vec::new(),
        }
    }

    fn get(&mut self, b: usize) -> &MergerRateTable {
        if self.tables.len() <= b {
            self.tables.resize(b + 1, None);
        }
        let alpha = self.alpha;
        self.tables[b].get_or_insert_with(|| MergerRateTable::new(b as u64, alpha).expect("b >= 2"))
    }
}

pub fn simulate_partition<R: Rng + ?Sized>(
    n: u32,
    alpha: AlphaParam,
    rng: &mut R,
    store_history: bool,
) -> Result<PartitionRun> {
    simulate_partition_with(n, &mut OracleTables::new(alpha), rng, store_history)
}

pub fn simulate_partition_with<R: Rng + ?Sized>(
    n: u32,
    tables: &mut OracleTables,
    rng: &mut R,
    store_history: bool,
) -> Result<PartitionRun> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample size must be at least 1".into(),
        ));
    }
    let mut state = PartitionState::singletons(n);
    let mut history = store_history.then(|| vec![state.clone()]);
    let mut x = vec![n as u64];
    let mut y = vec![n as u64];
    let mut total_length = 0.0;
    let mut external_length = 0.0;
    let mut order: Vec<usize> = Vec::with_capacity(n as usize);

    while state.block_count() >= 2 {
        let b = state.block_count();
        let table = tables.get(b);
        let w: f64 = Exp1.sample(rng);
        let dt = w / table.total_rate;
        let k = table.sample_size(rng) as usize;

        total_length += b as f64 * dt;
        external_length += external_count(&state) as f64 * dt;
        state.time += dt;

        // Partial Fisher-Yates: the first k slots become a uniform k-subset.
        order.clear();
        order.extend(0..b);
        for i in 0..k {
            let j = rng.random_range(i..b);
            order.swap(i, j);
        }
        state.merge(&mut order[..k]);

        x.push(state.block_count() as u64);
        y.push(external_count(&state) as u64);
        if let Some(h) = history.as_mut() {
            h.push(state.clone());
        }
    }

    Ok(PartitionRun {
        n,
        tau: x.len() - 1,
        total_length,
        external_length,
        x,
        y,
        history,
    })
}
