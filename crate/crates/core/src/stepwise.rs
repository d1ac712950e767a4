//! One token per forward pass: the reference decoder whose output every other
//! strategy must reproduce.

use crate::error::{Error, Result};
use crate::model::MaskedModel;
use crate::sequence::SequenceState;
use crate::trace::{stepwise_choice, DecodeTrace, TraceStep};

#[derive(Debug, Clone, PartialEq)]
pub struct StepwiseOutput {
    pub state: SequenceState,
    pub trace: DecodeTrace,
    pub forwards: usize,
}

/// Decode until no mask remains, placing the current block's most confident
/// prediction after each forward. Records top-`topk` candidates per step.
pub fn stepwise_decode<M: MaskedModel + ?Sized>(model: &M, state: &SequenceState, topk: usize) -> Result<StepwiseOutput> {
    if !state.has_masks() {
        return Err(Error::InvalidState("nothing to decode: no masked positions".into()));
    }
    let mut state = state.clone();
    let mut trace = DecodeTrace::new(&state, model.vocab_size(), topk);
    let forwards = finish_stepwise(model, &mut state, &mut trace, topk, |_| {})?;
    Ok(StepwiseOutput { state, trace, forwards })
}

/// Run the stepwise loop on `state` until it has no masks, appending to `trace`.
/// `on_step` sees each step after it is placed. Returns the number of forwards.
pub(crate) fn finish_stepwise<M: MaskedModel + ?Sized>(
    model: &M,
    state: &mut SequenceState,
    trace: &mut DecodeTrace,
    topk: usize,
    mut on_step: impl FnMut(&TraceStep),
) -> Result<usize> {
    let mut forwards = 0;
    while state.has_masks() {
        let logits = model.forward(std::slice::from_ref(state))?;
        forwards += 1;
        let choice = stepwise_choice(state, &logits[0])?.expect("state has masks");
        let step = TraceStep::record(state, &logits[0], choice, topk)?;
        state.place_in_place(choice.position, choice.token)?;
        on_step(&step);
        trace.steps.push(step);
    }
    Ok(forwards)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{predict_with_confidence, SynthModel, SynthModelConfig, TableEntry, TableModel};

    fn context_free(seed: u64) -> SynthModel {
        SynthModel::new(SynthModelConfig {
            seed,
            vocab_size: 12,
            sharpness: 2.0,
            context_window: 0,
        })
        .unwrap()
    }

    #[test]
    fn context_free_order_is_descending_confidence_per_block() {
        let model = context_free(21);
        let init = SequenceState::new(&[1, 2, 3], 8, 11, 4).unwrap();
        let out = stepwise_decode(&model, &init, 3).unwrap();
        assert_eq!(out.forwards, 8);

        // oracle: per-position argmax and confidence from the fixed logits
        let logits = &model.forward(std::slice::from_ref(&init)).unwrap()[0];
        let preds: Vec<(u32, f64)> = (3..11).map(|p| predict_with_confidence(logits.row(p)).unwrap()).collect();
        let expected_tokens: Vec<u32> = preds.iter().map(|p| p.0).collect();
        assert_eq!(out.state.generated(), &expected_tokens[..]);

        let mut expected_order = Vec::new();
        for block in [3..7usize, 7..11] {
            let mut ps: Vec<usize> = block.collect();
            ps.sort_by(|&a, &b| preds[b - 3].1.total_cmp(&preds[a - 3].1).then(a.cmp(&b)));
            expected_order.extend(ps);
        }
        let order: Vec<usize> = out.trace.steps.iter().map(|s| s.position).collect();
        assert_eq!(order, expected_order);
        assert_eq!(out.trace.block_order_violation(), None);
    }

    /// Every state along a left-to-right fill gets rows whose sharpness decreases
    /// with position, so the acceptance order is the position order.
    #[test]
    fn monotone_table_fixture_decodes_left_to_right() {
        let mask = 4u32;
        let gen = 4;
        let mut entries = Vec::new();
        for filled in 0..=gen {
            let mut tokens = vec![0u32];
            tokens.extend((0..gen).map(|i| if i < filled { (i % 3) as u32 } else { mask }));
            let mut rows = vec![vec![0.0; 5]];
            for i in 0..gen {
                let mut r = vec![0.0; 5];
                r[i % 3] = 4.0 - i as f64;
                rows.push(r);
            }
            entries.push(TableEntry { tokens, rows });
        }
        let model = TableModel::from_entries(entries).unwrap();
        let init = SequenceState::new(&[0], gen, mask, 8).unwrap();
        let out = stepwise_decode(&model, &init, 2).unwrap();
        let order: Vec<usize> = out.trace.steps.iter().map(|s| s.position).collect();
        assert_eq!(order, vec![1, 2, 3, 4]);
        assert_eq!(out.state.generated(), &[0, 1, 2, 0]);
    }

    #[test]
    fn single_token_single_forward() {
        let out = stepwise_decode(&context_free(1), &SequenceState::new(&[5], 1, 11, 8).unwrap(), 5).unwrap();
        assert_eq!(out.forwards, 1);
        assert_eq!(out.trace.len(), 1);
        assert_eq!(out.trace.steps[0].candidates.len(), 1);
        assert_eq!(out.trace.steps[0].candidates[0].top.len(), 5);
    }

    #[test]
    fn fully_decoded_input_is_rejected() {
        let s = SequenceState::new(&[], 1, 11, 8).unwrap().place_token(0, 3).unwrap();
        assert!(matches!(stepwise_decode(&context_free(1), &s, 1), Err(Error::InvalidState(_))));
    }

    #[test]
    fn reruns_are_identical() {
        let model = SynthModel::new(SynthModelConfig::default()).unwrap();
        let init = SequenceState::new(&[3, 1, 4], 16, 31, 8).unwrap();
        let a = stepwise_decode(&model, &init, 5).unwrap();
        let b = stepwise_decode(&model, &init, 5).unwrap();
        assert_eq!(a.trace.to_lines(), b.trace.to_lines());
        assert_eq!(a.trace.block_order_violation(), None);
    }
}
