#![allow(dead_code)]

use std::f64::consts::PI;

use nhvi_core::{
    BodyShape, ConstraintGain, MechanicalModel, Particle, ParticleParams, Pendulum, PendulumParams, Se2Body,
    Se2BodyParams, Vector,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn v(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn particle(gravity: f64) -> Particle {
    Particle::new(ParticleParams { mass: 1.0, gravity }).unwrap()
}

pub fn ellipse() -> Se2Body {
    Se2Body::new(Se2BodyParams::default()).unwrap()
}

pub fn star() -> Se2Body {
    Se2Body::new(Se2BodyParams {
        shape: BodyShape::Star { l: 1.0 },
        ..Default::default()
    })
    .unwrap()
}

pub fn pendulum() -> Pendulum {
    Pendulum::new(PendulumParams::default()).unwrap()
}

pub fn planar_pendulum() -> Pendulum {
    Pendulum::new(PendulumParams {
        gain: ConstraintGain::ZERO,
        ..Default::default()
    })
    .unwrap()
}

pub const ELLIPSE_Q0: [f64; 3] = [PI / 2.0, 0.0, 3.5];
pub const ELLIPSE_V0: [f64; 3] = [-3.0, 2.0, 0.0];
pub const PENDULUM_Q0: [f64; 2] = [0.75 * PI, 0.0];
pub const PENDULUM_V0: [f64; 2] = [0.25 * PI, 0.25 * (PI + 0.5) * PI];

/// A named model together with a sampler of admissible configurations.
pub struct Case {
    pub name: &'static str,
    pub model: Box<dyn MechanicalModel>,
    pub interior: fn(&mut ChaCha8Rng) -> Vector,
    pub boundary: fn(&mut ChaCha8Rng) -> Vector,
}

fn star_angle(rng: &mut ChaCha8Rng) -> f64 {
    // Stay clear of the corners at multiples of π/2.
    let quadrant = rng.gen_range(0..4) as f64;
    quadrant * PI / 2.0 + rng.gen_range(0.05..PI / 2.0 - 0.05)
}

fn pendulum_angle(rng: &mut ChaCha8Rng) -> f64 {
    let reach = (1.5f64 / 2.0).asin();
    let theta = rng.gen_range(0.05..reach);
    match rng.gen_range(0..4) {
        0 => theta,
        1 => PI - theta,
        2 => PI + theta,
        _ => 2.0 * PI - theta,
    }
}

pub fn cases() -> Vec<Case> {
    vec![
        Case {
            name: "particle",
            model: Box::new(particle(9.8)),
            interior: |r| v(&[r.gen_range(-5.0..5.0), r.gen_range(0.0..5.0)]),
            boundary: |r| v(&[r.gen_range(-5.0..5.0), 0.0]),
        },
        Case {
            name: "ellipse",
            model: Box::new(ellipse()),
            interior: |r| {
                let theta = r.gen_range(-2.0 * PI..2.0 * PI);
                let phi = BodyShape::Ellipse { a: 1.0, b: 0.5 }.phi(theta);
                v(&[theta, r.gen_range(-5.0..5.0), phi + r.gen_range(0.0..3.0)])
            },
            boundary: |r| {
                let theta = r.gen_range(-2.0 * PI..2.0 * PI);
                let phi = BodyShape::Ellipse { a: 1.0, b: 0.5 }.phi(theta);
                v(&[theta, r.gen_range(-5.0..5.0), phi])
            },
        },
        Case {
            name: "star",
            model: Box::new(star()),
            interior: |r| {
                let theta = star_angle(r);
                let phi = BodyShape::Star { l: 1.0 }.phi(theta);
                v(&[theta, r.gen_range(-5.0..5.0), phi + r.gen_range(0.0..3.0)])
            },
            boundary: |r| {
                let theta = star_angle(r);
                let phi = BodyShape::Star { l: 1.0 }.phi(theta);
                v(&[theta, r.gen_range(-5.0..5.0), phi])
            },
        },
        Case {
            name: "pendulum",
            model: Box::new(pendulum()),
            interior: |r| v(&[pendulum_angle(r), r.gen_range(-PI..PI)]),
            boundary: |r| {
                let reach = (1.5f64 / 2.0).asin();
                let theta = [reach, PI - reach, PI + reach, 2.0 * PI - reach][r.gen_range(0..4)];
                v(&[theta, r.gen_range(-PI..PI)])
            },
        },
    ]
}

/// Largest relative discrepancy between the analytic partials of `L_d` and
/// central differences of `L_d`, scaled by `max(1, |L_d|)`.
pub fn derivative_error<M: MechanicalModel + ?Sized>(
    ld: &nhvi_core::DiscreteLagrangian<'_, M>,
    q: &Vector,
    v: &Vector,
    h: f64,
) -> f64 {
    let partials = ld.partials(q, v, h);
    let scale = ld.eval(q, v, h).abs().max(1.0);
    let step = |x: f64| 1e-6 * x.abs().max(1.0);
    let mut worst: f64 = 0.0;
    for j in 0..q.len() {
        let dq = step(q[j]);
        let (mut qp, mut qm) = (q.clone(), q.clone());
        qp[j] += dq;
        qm[j] -= dq;
        let fd = (ld.eval(&qp, v, h) - ld.eval(&qm, v, h)) / (qp[j] - qm[j]);
        worst = worst.max((partials.d1[j] - fd).abs() / scale);

        let dv = step(v[j]);
        let (mut vp, mut vm) = (v.clone(), v.clone());
        vp[j] += dv;
        vm[j] -= dv;
        let fd = (ld.eval(q, &vp, h) - ld.eval(q, &vm, h)) / (vp[j] - vm[j]);
        worst = worst.max((partials.d2[j] - fd).abs() / scale);
    }
    let dh = 1e-6 * h;
    let fd = (ld.eval(q, v, h + dh) - ld.eval(q, v, h - dh)) / (2.0 * dh);
    worst.max((partials.d3 - fd).abs() / scale)
}

/// A random `(q, v, h)` with `q` admissible, `h` log-uniform in `[1e-4, 1e-1]`
/// and `(v − q)/h` of moderate size.
pub fn random_point(case: &Case, r: &mut ChaCha8Rng) -> (Vector, Vector, f64) {
    let q = (case.interior)(r);
    let h = 10f64.powf(r.gen_range(-4.0..-1.0));
    let w = Vector::from_fn(q.len(), |_, _| r.gen_range(-3.0..3.0));
    let v = &q + w * h;
    (q, v, h)
}
