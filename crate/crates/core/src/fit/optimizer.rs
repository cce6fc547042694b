//! Unconstrained minimizers for smooth objectives: limited-memory BFGS with a
//! strong-Wolfe line search, and steepest descent with backtracking.

use std::collections::VecDeque;

/// Sufficient-decrease constant.
const C1: f64 = 1e-4;
/// Curvature constant for the strong Wolfe condition.
const C2: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Lbfgs { memory: usize },
    GradientDescent,
}

impl Default for Method {
    fn default() -> Self {
        Method::Lbfgs { memory: 10 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Settings {
    pub method: Method,
    pub max_iterations: usize,
    /// Stop once `max_i |∂f/∂x_i|` falls to this value.
    pub gradient_tolerance: f64,
    /// Length of the very first step along the steepest-descent direction,
    /// measured as the largest coordinate change.
    pub initial_step: f64,
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each accepted iteration, starting with the initial point.
    pub trace: Vec<f64>,
}

pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Objective differences this small are rounding noise; the line search then
/// judges points by slope alone (approximate Wolfe conditions).
fn noise(f0: f64) -> f64 {
    1e-12 * f0.abs()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Objective evaluated at `x`, writing its gradient into `grad`.
pub trait Differentiable {
    fn eval(&self, x: &[f64], grad: &mut [f64]) -> f64;
}

impl<F: Fn(&[f64], &mut [f64]) -> f64> Differentiable for F {
    fn eval(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self(x, grad)
    }
}

struct Point {
    step: f64,
    x: Vec<f64>,
    value: f64,
    grad: Vec<f64>,
    slope: f64,
}

struct LineFn<'a, F> {
    f: &'a F,
    x0: &'a [f64],
    dir: &'a [f64],
    evals: usize,
}

impl<F: Differentiable> LineFn<'_, F> {
    fn at(&mut self, step: f64) -> Point {
        self.evals += 1;
        let x: Vec<f64> = self.x0.iter().zip(self.dir).map(|(a, d)| a + step * d).collect();
        let mut grad = vec![0.0; x.len()];
        let value = self.f.eval(&x, &mut grad);
        let slope = dot(&grad, self.dir);
        Point { step, x, value, grad, slope }
    }
}

/// Minimizer of the cubic interpolating two points, safeguarded into the
/// interior of `[lo, hi]` (either order).
fn interpolate(lo: &Point, hi: &Point) -> f64 {
    let (a, b) = (lo.step, hi.step);
    let d1 = lo.slope + hi.slope - 3.0 * (lo.value - hi.value) / (a - b);
    let disc = d1 * d1 - lo.slope * hi.slope;
    let mid = 0.5 * (a + b);
    if disc < 0.0 || !disc.is_finite() {
        return mid;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (hi.slope + d2 - d1) / (hi.slope - lo.slope + 2.0 * d2);
    let (min, max) = (a.min(b), a.max(b));
    let margin = 0.1 * (max - min);
    if !t.is_finite() || t < min + margin || t > max - margin {
        mid
    } else {
        t
    }
}

/// Strong-Wolfe line search (bracketing then zoom). Returns `None` if no step
/// with sufficient decrease was found.
fn strong_wolfe<F: Differentiable>(line: &mut LineFn<'_, F>, f0: f64, slope0: f64, first: f64) -> Option<Point> {
    let start = Point {
        step: 0.0,
        x: line.x0.to_vec(),
        value: f0,
        grad: Vec::new(),
        slope: slope0,
    };
    let mut prev = start;
    let mut step = first;
    for i in 0..40 {
        let cur = line.at(step);
        if !cur.value.is_finite() {
            step = 0.5 * (prev.step + step);
            continue;
        }
        if (cur.value - f0).abs() <= noise(f0) {
            if cur.slope.abs() <= -C2 * slope0 {
                return Some(cur);
            }
            if cur.slope >= 0.0 {
                return zoom(line, f0, slope0, prev, cur);
            }
            prev = cur;
            step *= 4.0;
            continue;
        }
        if cur.value > f0 + C1 * step * slope0 || (i > 0 && cur.value >= prev.value) {
            return zoom(line, f0, slope0, prev, cur);
        }
        if cur.slope.abs() <= -C2 * slope0 {
            return Some(cur);
        }
        if cur.slope >= 0.0 {
            return zoom(line, f0, slope0, cur, prev);
        }
        prev = cur;
        step *= 4.0;
    }
    (prev.step > 0.0).then_some(prev)
}

fn zoom<F: Differentiable>(line: &mut LineFn<'_, F>, f0: f64, slope0: f64, mut lo: Point, mut hi: Point) -> Option<Point> {
    for _ in 0..60 {
        let step = interpolate(&lo, &hi);
        if (hi.step - lo.step).abs() <= 1e-16 * lo.step.abs().max(hi.step.abs()) {
            break;
        }
        let cur = line.at(step);
        if cur.value.is_finite() && (cur.value - f0).abs() <= noise(f0) {
            if cur.slope.abs() <= -C2 * slope0 {
                return Some(cur);
            }
            if cur.slope * (hi.step - lo.step) >= 0.0 {
                hi = cur;
            } else {
                lo = cur;
            }
            continue;
        }
        if !cur.value.is_finite() || cur.value > f0 + C1 * step * slope0 || cur.value >= lo.value {
            hi = cur;
        } else {
            if cur.slope.abs() <= -C2 * slope0 {
                return Some(cur);
            }
            if cur.slope * (hi.step - lo.step) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
    }
    // Interval collapsed: accept the best point with sufficient decrease.
    (lo.step > 0.0).then_some(lo)
}

/// Minimizes `f` from `x0`.
pub fn minimize<F: Differentiable>(f: &F, x0: Vec<f64>, settings: &Settings) -> Minimum {
    let n = x0.len();
    let mut x = x0;
    let mut grad = vec![0.0; n];
    let mut value = f.eval(&x, &mut grad);
    let mut trace = vec![value];
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let capacity = match settings.method {
        Method::Lbfgs { memory } => memory.max(1),
        Method::GradientDescent => 0,
    };
    let mut last_step = 1.0;
    let mut iterations = 0;
    let mut converged = max_abs(&grad) <= settings.gradient_tolerance;

    while !converged && iterations < settings.max_iterations {
        let mut dir = if capacity > 0 {
            two_loop(&grad, &memory)
        } else {
            grad.iter().map(|g| -g).collect()
        };
        let mut slope = dot(&grad, &dir);
        if !(slope < 0.0) {
            memory.clear();
            dir = grad.iter().map(|g| -g).collect();
            slope = dot(&grad, &dir);
        }
        let first = if memory.is_empty() {
            match settings.method {
                Method::GradientDescent if iterations > 0 => 2.0 * last_step,
                _ => settings.initial_step / max_abs(&dir),
            }
        } else {
            1.0
        };

        let mut line = LineFn { f, x0: &x, dir: &dir, evals: 0 };
        let accepted = match settings.method {
            Method::Lbfgs { .. } => strong_wolfe(&mut line, value, slope, first),
            Method::GradientDescent => backtrack(&mut line, value, slope, first),
        };
        let Some(point) = accepted else {
            if memory.is_empty() {
                log::debug!("line search failed at iteration {iterations}; stopping");
                break;
            }
            memory.clear();
            continue;
        };
        if point.value > value + noise(value) {
            break;
        }

        let s: Vec<f64> = point.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = point.grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if capacity > 0 && sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if memory.len() == capacity {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }
        last_step = point.step;
        let progress = value - point.value;
        x = point.x;
        grad = point.grad;
        value = point.value;
        trace.push(value);
        iterations += 1;
        converged = max_abs(&grad) <= settings.gradient_tolerance;
        if !converged && progress == 0.0 && memory.is_empty() {
            break;
        }
    }

    Minimum {
        x,
        value,
        gradient: grad,
        iterations,
        converged,
        trace,
    }
}

/// `-H g` from the stored curvature pairs.
fn two_loop(grad: &[f64], memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = grad.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = memory.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in memory.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

fn backtrack<F: Differentiable>(line: &mut LineFn<'_, F>, f0: f64, slope0: f64, first: f64) -> Option<Point> {
    let mut step = first;
    for _ in 0..80 {
        let p = line.at(step);
        if p.value.is_finite() && p.value <= f0 + C1 * step * slope0 {
            return Some(p);
        }
        step *= 0.5;
    }
    None
}
