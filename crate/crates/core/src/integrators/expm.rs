/// `exp(t M)` for a real 2x2 matrix using the closed form
/// `e^{tau/2} [c(s) I + sinc(s) (A - tau/2 I)]` with `A = t M`.
///
/// Falls back to scaling-and-squaring of a Taylor polynomial when the
/// eigenvalues nearly coincide.
pub fn expm2(m: [[f64; 2]; 2], t: f64) -> [[f64; 2]; 2] {
    let a = [[m[0][0] * t, m[0][1] * t], [m[1][0] * t, m[1][1] * t]];
    let tau = a[0][0] + a[1][1];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let disc = 0.25 * tau * tau - det;
    if disc.abs() < 1e-12 {
        return expm2_taylor(m, t);
    }
    let (c, sinc) = if disc > 0.0 {
        let s = disc.sqrt();
        (s.cosh(), s.sinh() / s)
    } else {
        let w = (-disc).sqrt();
        (w.cos(), w.sin() / w)
    };
    let e = (0.5 * tau).exp();
    let h = 0.5 * tau;
    [
        [e * (c + sinc * (a[0][0] - h)), e * sinc * a[0][1]],
        [e * sinc * a[1][0], e * (c + sinc * (a[1][1] - h))],
    ]
}

/// Scaling and squaring with a degree-18 Taylor polynomial.
pub fn expm2_taylor(m: [[f64; 2]; 2], t: f64) -> [[f64; 2]; 2] {
    let norm = (m[0][0].abs() + m[0][1].abs()).max(m[1][0].abs() + m[1][1].abs()) * t.abs();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scale = t / 2f64.powi(squarings);
    let a = [
        [m[0][0] * scale, m[0][1] * scale],
        [m[1][0] * scale, m[1][1] * scale],
    ];
    let mut result = [[1.0, 0.0], [0.0, 1.0]];
    let mut term = [[1.0, 0.0], [0.0, 1.0]];
    for k in 1..=18 {
        term = mul(term, a);
        let inv = 1.0 / k as f64;
        for row in term.iter_mut() {
            for v in row.iter_mut() {
                *v *= inv;
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        result = mul(result, result);
    }
    result
}

pub(crate) fn mul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: [[f64; 2]; 2], b: [[f64; 2]; 2], tol: f64) -> bool {
        (0..2).all(|i| (0..2).all(|j| (a[i][j] - b[i][j]).abs() <= tol * (1.0 + b[i][j].abs())))
    }

    #[test]
    fn rotation_and_diagonal() {
        let r = expm2([[0.0, 1.0], [-1.0, 0.0]], 0.3);
        assert!(close(
            r,
            [[0.3f64.cos(), 0.3f64.sin()], [-0.3f64.sin(), 0.3f64.cos()]],
            1e-15
        ));
        let d = expm2([[-2.0, 0.0], [0.0, 0.5]], 1.5);
        assert!(close(
            d,
            [[(-3.0f64).exp(), 0.0], [0.0, 0.75f64.exp()]],
            1e-14
        ));
    }

    #[test]
    fn defective_jordan_block() {
        // [[l, 1], [0, l]] -> e^{lt} [[1, t], [0, 1]]
        let e = expm2([[-0.7, 1.0], [0.0, -0.7]], 2.0);
        let f = (-1.4f64).exp();
        assert!(close(e, [[f, 2.0 * f], [0.0, f]], 1e-13));
    }

    proptest! {
        #[test]
        fn closed_form_matches_taylor(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0, d in -3.0f64..3.0, t in 0.0f64..2.0) {
            let m = [[a, b], [c, d]];
            prop_assert!(close(expm2(m, t), expm2_taylor(m, t), 1e-10));
        }

        #[test]
        fn semigroup_property(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, d in -2.0f64..2.0) {
            let m = [[a, b], [c, d]];
            let whole = expm2(m, 1.0);
            let half = expm2(m, 0.5);
            prop_assert!(close(mul(half, half), whole, 1e-11));
        }
    }
}
