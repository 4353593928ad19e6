use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::exact::{int, Surd};
use crate::labeling::{ensure_valid, Problem, RectLabel};
use crate::robp::Robp;

fn input_count_check(p: &Robp, max_inputs: u64) -> Result<()> {
    let count = BigUint::from(p.alphabet().size()).pow(p.n() as u32);
    if count > BigUint::from(max_inputs) {
        return Err(Error::Budget {
            what: "exhaustive inputs",
            needed: count.to_string(),
            budget: max_inputs,
        });
    }
    Ok(())
}

/// Depth-first walk over every input prefix, passing the layer, the vertex
/// reached and the frequency vector read so far.
fn walk(p: &Robp, mut visit: impl FnMut(usize, usize, &[u32])) {
    let alphabet = p.alphabet();
    let d = alphabet.arity();
    let shifts: Vec<Vec<u32>> = (0..alphabet.size())
        .map(|s| (0..d).map(|j| alphabet.counts(s, j) as u32).collect())
        .collect();
    let mut freq = vec![0u32; d];
    descend(p, &shifts, 0, 0, &mut freq, &mut visit);
}

fn descend(
    p: &Robp,
    shifts: &[Vec<u32>],
    t: usize,
    v: usize,
    freq: &mut [u32],
    visit: &mut impl FnMut(usize, usize, &[u32]),
) {
    visit(t, v, freq);
    if t == p.n() {
        return;
    }
    for (s, shift) in shifts.iter().enumerate() {
        for (f, x) in freq.iter_mut().zip(shift) {
            *f += x;
        }
        descend(p, shifts, t + 1, p.target(t, v, s) as usize, freq, visit);
        for (f, x) in freq.iter_mut().zip(shift) {
            *f -= x;
        }
    }
}

/// Evaluates `p` on every input and checks each output coordinate against
/// the true frequency.
pub fn exhaustive_verify(
    p: &Robp,
    problem: Problem,
    delta: impl Into<Surd>,
    max_inputs: u64,
) -> Result<bool> {
    let delta = delta.into();
    problem.check(p)?;
    ensure_valid(p, false)?;
    if p.outputs().arity() != problem.arity() {
        return Err(Error::ArityMismatch {
            expected: problem.arity(),
            got: p.outputs().arity(),
        });
    }
    input_count_check(p, max_inputs)?;
    let n = p.n();
    let mut ok = true;
    walk(p, |t, v, freq| {
        if t != n || !ok {
            return;
        }
        for (j, &f) in freq.iter().enumerate() {
            let err = p.outputs().get(v, j) - int(f);
            let err = if err < int(0) { -err } else { err };
            if Surd::from(err) > delta {
                ok = false;
            }
        }
    });
    Ok(ok)
}

/// Per-vertex min/max frequencies over every prefix that reaches it, found
/// by enumeration. Mirrors the full-coordinate labels.
pub fn enumerate_labels(p: &Robp, max_inputs: u64) -> Result<Vec<Vec<RectLabel>>> {
    ensure_valid(p, true)?;
    input_count_check(p, max_inputs)?;
    let mut labels: Vec<Vec<Option<RectLabel>>> =
        p.layer_sizes().iter().map(|&s| vec![None; s]).collect();
    walk(p, |t, v, freq| match &mut labels[t][v] {
        None => {
            labels[t][v] = Some(RectLabel {
                lo: freq.to_vec(),
                hi: freq.to_vec(),
            })
        }
        Some(r) => {
            for ((lo, hi), &f) in r.lo.iter_mut().zip(&mut r.hi).zip(freq) {
                *lo = (*lo).min(f);
                *hi = (*hi).max(f);
            }
        }
    });
    labels
        .into_iter()
        .enumerate()
        .map(|(t, layer)| {
            layer
                .into_iter()
                .enumerate()
                .map(|(v, r)| r.ok_or_else(|| Error::InvalidProgram(format!("vertex ({t}, {v}) is unreachable"))))
                .collect()
        })
        .collect()
}
