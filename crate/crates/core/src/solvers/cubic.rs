use num_traits::Float;

fn eval<T: Float>(c: &[T; 4], x: T) -> T {
    ((c[3] * x + c[2]) * x + c[1]) * x + c[0]
}

/// Maximizes `c0 + c1·x + c2·x² + c3·x³` over `[0, 1]`.
///
/// Candidates are the endpoints and the roots of the derivative inside the
/// interval; the best candidate wins and ties go to the smaller `x`.
/// Degenerate (quadratic, linear, constant) polynomials need no special
/// handling by the caller.
pub fn maximize_cubic_on_unit_interval<T: Float>(c0: T, c1: T, c2: T, c3: T) -> (T, T) {
    let c = [c0, c1, c2, c3];
    let zero = T::zero();
    let one = T::one();
    let two = one + one;
    let three = two + one;

    // derivative: qa·x² + qb·x + qc
    let (qa, qb, qc) = (three * c3, two * c2, c1);
    let mut candidates = vec![zero, one];
    if qa == zero {
        if qb != zero {
            candidates.push(-qc / qb);
        }
    } else {
        let disc = qb * qb - (two + two) * qa * qc;
        if disc >= zero {
            let sq = disc.sqrt();
            let q = if qb >= zero { -(qb + sq) / two } else { -(qb - sq) / two };
            if q != zero {
                candidates.push(q / qa);
                candidates.push(qc / q);
            } else {
                candidates.push(zero);
            }
        }
    }
    let mut interior: Vec<T> = candidates.into_iter().filter(|&x| x >= zero && x <= one).collect();
    interior.sort_by(|a, b| a.partial_cmp(b).expect("finite candidates"));

    let mut best = (zero, eval(&c, zero));
    for x in interior {
        let fx = eval(&c, x);
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}
