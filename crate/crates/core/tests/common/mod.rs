//! Shared fixtures for integration tests.

#![allow(dead_code)]

use ssd_core::model::{TableEntry, TableModel};
use ssd_core::SequenceState;

/// A table-model scenario in which stepwise decoding fills positions in
/// `stepwise_order`, while draft confidences (away from the top pick) rank
/// positions in left-to-right order.
///
/// Every reachable state (any subset of generation positions filled with their
/// target tokens) is tabulated. In each state the first still-masked position
/// of `stepwise_order` gets logit 10 on its target; every other masked
/// position `p` gets `5 - 0.1 * p` on its target.
pub struct OutOfOrderScenario {
    pub name: String,
    pub prompt: Vec<u32>,
    pub targets: Vec<u32>,
    pub stepwise_order: Vec<usize>,
    pub draft_len: usize,
    pub vocab_size: usize,
}

impl OutOfOrderScenario {
    pub fn mask_id(&self) -> u32 {
        self.vocab_size as u32 - 1
    }

    pub fn gen_len(&self) -> usize {
        self.targets.len()
    }

    pub fn initial_state(&self) -> SequenceState {
        SequenceState::new(&self.prompt, self.gen_len(), self.mask_id(), self.gen_len()).unwrap()
    }

    /// Table fixture text covering all `2^L` reachable states.
    pub fn fixture_text(&self) -> String {
        let l = self.gen_len();
        let p = self.prompt.len();
        let mask = self.mask_id();
        let mut entries = Vec::with_capacity(1 << l);
        for subset in 0u32..(1 << l) {
            let filled = |i: usize| subset & (1 << i) != 0;
            let mut tokens = self.prompt.clone();
            tokens.extend((0..l).map(|i| if filled(i) { self.targets[i] } else { mask }));
            let top = self.stepwise_order.iter().copied().find(|&i| !filled(i));
            let mut rows = vec![vec![0.0; self.vocab_size]; p + l];
            for i in (0..l).filter(|&i| !filled(i)) {
                let logit = if Some(i) == top { 10.0 } else { 5.0 - 0.1 * i as f64 };
                rows[p + i][self.targets[i] as usize] = logit;
            }
            entries.push(TableEntry { tokens, rows });
        }
        TableModel::from_entries(entries).unwrap().to_text()
    }

    pub fn model(&self) -> TableModel {
        TableModel::parse(&self.fixture_text()).unwrap()
    }
}

/// Forwards an SSD run spends on `remaining` masks when every round fully
/// accepts: rounds of `n + 1`, then one forward per token once fewer than `n`
/// remain.
fn full_acceptance_forwards(mut remaining: usize, n: usize) -> usize {
    let mut f = 0;
    while remaining >= n {
        f += 1;
        remaining = remaining.saturating_sub(n + 1);
    }
    f + remaining
}

/// Single adjacent swap at generation offset `swap` (offsets `swap` and
/// `swap + 1` exchange order), with `1 <= swap <= n - 2` so that the greedy
/// chain fails at depth `swap` of the first round while the mix-order branch
/// catches it. Only lengths where the extra early token also saves a later
/// forward are kept.
pub fn out_of_order_scenarios() -> Vec<OutOfOrderScenario> {
    let mut out = Vec::new();
    for n in 3..=5usize {
        for swap in 1..=n - 2 {
            for l in 6..=10usize {
                let greedy_left = l - (swap + 1);
                let mix_left = greedy_left - 1;
                if full_acceptance_forwards(mix_left, n) >= full_acceptance_forwards(greedy_left, n) {
                    continue;
                }
                for variant in 0..2u32 {
                    let vocab_size = 8 + variant as usize * 4;
                    let prompt: Vec<u32> = (0..variant * 3).map(|i| (i * 5 + 1) % (vocab_size as u32 - 1)).collect();
                    let targets: Vec<u32> = (0..l as u32).map(|i| (i * 3 + variant + 2) % (vocab_size as u32 - 1)).collect();
                    let mut order: Vec<usize> = (0..l).collect();
                    order.swap(swap, swap + 1);
                    out.push(OutOfOrderScenario {
                        name: format!("n{n}-swap{swap}-l{l}-v{variant}"),
                        prompt,
                        targets,
                        stepwise_order: order,
                        draft_len: n,
                        vocab_size,
                    });
                }
            }
        }
    }
    out
}
