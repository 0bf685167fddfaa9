use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nhvi_core::{
    newton_solve, resolve_impact, simulate, step_plus, BodyShape, DiscreteLagrangian, NewtonOptions, Particle,
    ParticleParams, Pendulum, PendulumParams, Rule, Se2Body, Se2BodyParams, SimOptions, Vector,
};

fn v(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

fn ellipse() -> Se2Body {
    Se2Body::new(Se2BodyParams {
        mass: 1.0,
        gravity: 9.8,
        inertia: None,
        shape: BodyShape::Ellipse { a: 1.0, b: 0.5 },
    })
    .unwrap()
}

fn pendulum() -> Pendulum {
    Pendulum::new(PendulumParams {
        mass: 1.0,
        gravity: 9.8,
        length: 2.0,
        radius: 1.5,
        gain: Default::default(),
    })
    .unwrap()
}

fn bench_newton(c: &mut Criterion) {
    let opts = NewtonOptions::default();
    let x0 = v(&[1.0, 1.0]);
    c.bench_function("newton_solve/rosenbrock_gradient", |b| {
        b.iter(|| {
            newton_solve(
                |x: &Vector| v(&[2.0 * (x[0] - 0.3) - 40.0 * x[0] * (x[1] - x[0] * x[0]), 20.0 * (x[1] - x[0] * x[0])]),
                black_box(&x0),
                &opts,
            )
            .unwrap()
        })
    });
}

fn bench_steps(c: &mut Criterion) {
    let opts = SimOptions::default();

    let body = ellipse();
    let ld = DiscreteLagrangian::new(&body, Rule::Midpoint);
    let traj = simulate(&ld, &v(&[PI / 2.0, 0.0, 3.5]), &v(&[-3.0, 2.0, 0.0]), 0.0, 0.2, 0.01, &opts).unwrap();
    let state = traj.states.last().unwrap().clone();
    c.bench_function("step_plus/ellipse", |b| {
        b.iter(|| step_plus(&ld, black_box(&state), 0.01, &opts.newton).unwrap())
    });

    let pend = pendulum();
    let ld = DiscreteLagrangian::new(&pend, Rule::RetractionLeft);
    let traj = simulate(
        &ld,
        &v(&[0.75 * PI, 0.0]),
        &v(&[0.25 * PI, 0.25 * (PI + 0.5) * PI]),
        0.0,
        0.1,
        1e-3,
        &opts,
    )
    .unwrap();
    let state = traj.states.last().unwrap().clone();
    c.bench_function("step_plus/pendulum", |b| {
        b.iter(|| step_plus(&ld, black_box(&state), 1e-3, &opts.newton).unwrap())
    });
}

fn bench_impact(c: &mut Criterion) {
    let opts = SimOptions::default();
    let h = 1e-3;
    let particle = Particle::new(ParticleParams::default()).unwrap();
    let ld = DiscreteLagrangian::new(&particle, Rule::Midpoint);
    let traj = simulate(&ld, &v(&[0.0, 0.5]), &v(&[0.3, 0.0]), 0.0, 0.5, h, &opts).unwrap();
    let event = traj.impacts.first().expect("particle reaches the floor");
    let state = traj.states[event.k].clone();
    c.bench_function("resolve_impact/particle", |b| {
        b.iter(|| {
            resolve_impact(&ld, state.k, state.t, &state.q, &state.p, h, black_box(&state.v), &opts).unwrap()
        })
    });

    let body = ellipse();
    let ld = DiscreteLagrangian::new(&body, Rule::Midpoint);
    let h = 0.01;
    let traj = simulate(&ld, &v(&[PI / 2.0, 0.0, 3.5]), &v(&[-3.0, 2.0, 0.0]), 0.0, 1.0, h, &opts).unwrap();
    let event = traj.impacts.first().expect("ellipse reaches the floor");
    let state = traj.states[event.k].clone();
    c.bench_function("resolve_impact/ellipse", |b| {
        b.iter(|| {
            resolve_impact(&ld, state.k, state.t, &state.q, &state.p, h, black_box(&state.v), &opts).unwrap()
        })
    });
}

fn bench_simulate(c: &mut Criterion) {
    let opts = SimOptions::default();
    let body = ellipse();
    let ld = DiscreteLagrangian::new(&body, Rule::Midpoint);
    let (q0, v0) = (v(&[PI / 2.0, 0.0, 3.5]), v(&[-3.0, 2.0, 0.0]));
    c.bench_function("simulate/ellipse_2s", |b| {
        b.iter(|| simulate(&ld, black_box(&q0), &v0, 0.0, 2.0, 0.01, &opts).unwrap())
    });
}

criterion_group!(benches, bench_newton, bench_steps, bench_impact, bench_simulate);
criterion_main!(benches);
