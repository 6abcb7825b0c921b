//! Fused vector operations: several scaled vectors combined in a single pass
//! over the data.

use crate::error::CoreError;

/// `out = sum_k coeffs[k] * vectors[k]`, computed entry-by-entry in one sweep.
pub fn fused_linear_combination(
    coeffs: &[f64],
    vectors: &[&[f64]],
    out: &mut [f64],
) -> Result<(), CoreError> {
    if coeffs.is_empty() || vectors.is_empty() {
        return Err(CoreError::EmptyTermList);
    }
    if coeffs.len() != vectors.len() {
        return Err(CoreError::LengthMismatch {
            expected: coeffs.len(),
            got: vectors.len(),
        });
    }
    for v in vectors {
        if v.len() != out.len() {
            return Err(CoreError::LengthMismatch {
                expected: out.len(),
                got: v.len(),
            });
        }
    }
    for i in 0..out.len() {
        let mut acc = 0.0;
        for (c, v) in coeffs.iter().zip(vectors) {
            acc += c * v[i];
        }
        out[i] = acc;
    }
    Ok(())
}
