//! Embedded Dormand-Prince 5(4) Runge-Kutta stepping for small autonomous
//! systems.

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// C2..C5 document the abscissae; the system is autonomous so they are unused.
const _: [f64; 4] = [C2, C3, C4, C5];

pub(crate) type State = [f64; 4];

fn axpy(y: &State, terms: &[(f64, &State)], h: f64) -> State {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..4 {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// One Dormand-Prince step of size `h`. Returns the fifth-order solution and
/// the local error estimate.
pub(crate) fn dp5_step<F, E>(f: &F, y: &State, h: f64) -> Result<(State, State), E>
where
    F: Fn(&State) -> Result<State, E>,
{
    let k1 = f(y)?;
    let k2 = f(&axpy(y, &[(A21, &k1)], h))?;
    let k3 = f(&axpy(y, &[(A31, &k1), (A32, &k2)], h))?;
    let k4 = f(&axpy(y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h))?;
    let k5 = f(&axpy(y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h))?;
    let k6 = f(&axpy(
        y,
        &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        h,
    ))?;
    let y_new = axpy(
        y,
        &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        h,
    );
    let k7 = f(&y_new)?;
    let mut err = [0.0; 4];
    for i in 0..4 {
        err[i] =
            h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    Ok((y_new, err))
}

/// Scaled max-norm of the error estimate; accept the step when `<= 1`.
pub(crate) fn error_ratio(y0: &State, y1: &State, err: &State, tol: f64) -> f64 {
    (0..4)
        .map(|i| err[i].abs() / (tol * (1.0 + y0[i].abs().max(y1[i].abs()))))
        .fold(0.0, f64::max)
}

/// Step-size update factor for an error ratio, clamped to `[0.2, 5]`.
pub(crate) fn step_factor(ratio: f64) -> f64 {
    if ratio == 0.0 {
        5.0
    } else {
        (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotation(y: &State) -> Result<State, ()> {
        Ok([y[1], -y[0], 0.0, 1.0])
    }

    #[test]
    fn fixed_step_convergence_is_fifth_order() {
        let run = |n: usize| {
            let h = 1.0 / n as f64;
            let mut y = [1.0, 0.0, 0.0, 0.0];
            for _ in 0..n {
                y = dp5_step(&rotation, &y, h).unwrap().0;
            }
            ((y[0] - 1f64.cos()).powi(2) + (y[1] + 1f64.sin()).powi(2)).sqrt()
        };
        let e1 = run(10);
        let e2 = run(20);
        let order = (e1 / e2).log2();
        assert!(order > 4.7 && order < 5.5, "observed order {order}");
    }

    #[test]
    fn error_estimate_vanishes_for_linear_flow() {
        let f = |_: &State| -> Result<State, ()> { Ok([1.0, 2.0, 3.0, 0.5]) };
        let (y, err) = dp5_step(&f, &[0.0; 4], 0.3).unwrap();
        assert!((y[1] - 0.6).abs() < 1e-15);
        assert!(err.iter().all(|e| e.abs() < 1e-15));
    }
}
