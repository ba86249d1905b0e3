//! Calm-water resistance: ITTC-line friction, thin-ship (Michell) wave
//! resistance, merit coefficient and the operational merit over a speed
//! range.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{hydrostatics, DimensionalSurface, HullForm, HydrostaticsReport};
use crate::quadrature::{composite_gauss_legendre, trapezoid};

/// Water properties. Defaults: fresh water, ν = 1.016e-6 m²/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fluid {
    /// kg/m³
    pub density: f64,
    /// m²/s
    pub kinematic_viscosity: f64,
    /// m/s²
    pub gravity: f64,
}

impl Default for Fluid {
    fn default() -> Self {
        Fluid {
            density: 1000.0,
            kinematic_viscosity: 1.016e-6,
            gravity: 9.81,
        }
    }
}

/// Lowest and highest Froude numbers accepted by [`evaluate`].
pub const FN_BAND: (f64, f64) = (0.05, 0.6);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConditions {
    /// m/s
    pub speed: f64,
    pub froude: f64,
    pub reynolds: f64,
    pub fluid: Fluid,
}

impl FlowConditions {
    /// Flow at Froude number `froude` for a hull of length `length`.
    pub fn new(length: f64, froude: f64, fluid: Fluid) -> Result<Self> {
        if !(length > 0.0) || !(froude > 0.0) || !froude.is_finite() {
            return Err(Error::InvalidDimension(format!(
                "flow needs L > 0 and Fn > 0, got L = {length}, Fn = {froude}"
            )));
        }
        let speed = froude * (fluid.gravity * length).sqrt();
        let reynolds = speed * length / fluid.kinematic_viscosity;
        if !(reynolds > 100.0) {
            return Err(Error::SingularRegime(reynolds));
        }
        Ok(FlowConditions {
            speed,
            froude,
            reynolds,
            fluid,
        })
    }

    /// Reynolds number of a hull of length `length` at Froude number `froude`.
    pub fn reynolds_for(length: f64, froude: f64, fluid: &Fluid) -> f64 {
        froude * (fluid.gravity * length).sqrt() * length / fluid.kinematic_viscosity
    }
}

/// ITTC 1957 correlation line.
pub fn friction_coefficient(reynolds: f64) -> Result<f64> {
    if !(reynolds > 100.0) {
        return Err(Error::SingularRegime(reynolds));
    }
    let d = reynolds.log10() - 2.0;
    Ok(0.075 / (d * d))
}

fn frictional_from_area(wetted_surface: f64, flow: &FlowConditions) -> Result<f64> {
    if !(wetted_surface > 0.0) {
        return Err(Error::DegenerateHull(format!(
            "wetted surface {wetted_surface} is not positive"
        )));
    }
    let cf = friction_coefficient(flow.reynolds)?;
    Ok(0.5 * flow.fluid.density * flow.speed * flow.speed * wetted_surface * cf)
}

/// R_F = ½ ρ U² S C_F, in newtons.
pub fn frictional_resistance(hull: &HullForm, flow: &FlowConditions) -> Result<f64> {
    let h = hydrostatics(hull)?;
    frictional_from_area(h.wetted_surface, flow)
}

/// Outer-integral settings of the thin-ship wave-resistance quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MichellSettings {
    /// Total Gauss-Legendre nodes over θ ∈ (0, π/2).
    pub n_theta: usize,
    /// Nodes per panel.
    pub panel_order: usize,
    /// Stop once a whole panel falls below this fraction of the running
    /// maximum of the integrand.
    pub truncation: f64,
}

impl Default for MichellSettings {
    fn default() -> Self {
        MichellSettings {
            n_theta: 256,
            panel_order: 8,
            truncation: 1e-14,
        }
    }
}

impl MichellSettings {
    pub fn with_nodes(n_theta: usize) -> Self {
        MichellSettings {
            n_theta,
            ..Default::default()
        }
    }

    fn panels(&self) -> Result<usize> {
        if self.panel_order == 0 || self.n_theta < self.panel_order || !self.n_theta.is_multiple_of(self.panel_order) {
            return Err(Error::InvalidConfig(format!(
                "n_theta = {} must be a positive multiple of panel_order = {}",
                self.n_theta, self.panel_order
            )));
        }
        Ok(self.n_theta / self.panel_order)
    }
}

/// `∂y/∂x` at every node, second-order differences along each waterline
/// (central inside, three-point one-sided at the ends).
pub fn longitudinal_slopes(s: &DimensionalSurface) -> Vec<f64> {
    let ns = s.x.len();
    let nw = s.z.len();
    let y = |i: usize, j: usize| s.y[i * nw + j];
    let mut out = vec![0.0; ns * nw];
    if ns == 2 {
        let h = s.x[1] - s.x[0];
        for j in 0..nw {
            let d = (y(1, j) - y(0, j)) / h;
            out[j] = d;
            out[nw + j] = d;
        }
        return out;
    }
    for i in 0..ns {
        // three consecutive stations a < b < c around (or at the end of) i
        let (a, b, c) = if i == 0 {
            (0, 1, 2)
        } else if i == ns - 1 {
            (ns - 3, ns - 2, ns - 1)
        } else {
            (i - 1, i, i + 1)
        };
        let (xa, xb, xc) = (s.x[a], s.x[b], s.x[c]);
        let xi = s.x[i];
        // derivative of the quadratic through the three points, at xi
        let wa = (2.0 * xi - xb - xc) / ((xa - xb) * (xa - xc));
        let wb = (2.0 * xi - xa - xc) / ((xb - xa) * (xb - xc));
        let wc = (2.0 * xi - xa - xb) / ((xc - xa) * (xc - xb));
        for j in 0..nw {
            out[i * nw + j] = wa * y(a, j) + wb * y(b, j) + wc * y(c, j);
        }
    }
    out
}

/// ∫₀¹ (1-s) e^{-ws} ds and ∫₀¹ s e^{-ws} ds.
fn hat_moments(w: Complex64) -> (Complex64, Complex64) {
    if w.norm() < 0.5 {
        // power series; terms (-w)^m / (m+2)! and (m+1)(-w)^m / (m+2)!
        let mut h0 = Complex64::new(0.0, 0.0);
        let mut h1 = Complex64::new(0.0, 0.0);
        let mut pow = Complex64::new(1.0, 0.0);
        let mut fact = 2.0;
        for m in 0..18 {
            h0 += pow / fact;
            h1 += pow * (m as f64 + 1.0) / fact;
            pow *= -w;
            fact *= m as f64 + 3.0;
        }
        (h0, h1)
    } else {
        let e = (-w).exp();
        let w2 = w * w;
        ((w - 1.0 + e) / w2, (1.0 - (1.0 + w) * e) / w2)
    }
}

/// Nodal weights `W_k = ∫ φ_k(t) e^{c t} dt` for the piecewise-linear hat
/// functions `φ_k` on `nodes`.
fn hat_weights(nodes: &[f64], c: Complex64, out: &mut [Complex64]) {
    out.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
    for k in 0..nodes.len() - 1 {
        let h = nodes[k + 1] - nodes[k];
        let e_upper = (c * nodes[k + 1]).exp();
        let (h0, h1) = hat_moments(c * h);
        out[k] += e_upper * h1 * h;
        out[k + 1] += e_upper * h0 * h;
    }
}

/// Kochin-type amplitude `P + iQ = ∬ ∂y/∂x · e^{kz} e^{iκx} dx dz` for the
/// bilinear interpolant of the nodal slopes, integrated exactly cell by cell.
struct Amplitude<'a> {
    x: &'a [f64],
    z: &'a [f64],
    slopes: &'a [f64],
    wx: Vec<Complex64>,
    wz: Vec<Complex64>,
}

impl<'a> Amplitude<'a> {
    fn new(s: &'a DimensionalSurface, slopes: &'a [f64]) -> Self {
        Amplitude {
            x: &s.x,
            z: &s.z,
            slopes,
            wx: vec![Complex64::new(0.0, 0.0); s.x.len()],
            wz: vec![Complex64::new(0.0, 0.0); s.z.len()],
        }
    }

    fn eval(&mut self, depth_wavenumber: f64, long_wavenumber: f64) -> Complex64 {
        hat_weights(self.z, Complex64::new(depth_wavenumber, 0.0), &mut self.wz);
        hat_weights(self.x, Complex64::new(0.0, long_wavenumber), &mut self.wx);
        let nw = self.z.len();
        let mut total = Complex64::new(0.0, 0.0);
        for (i, wx) in self.wx.iter().enumerate() {
            let row = &self.slopes[i * nw..(i + 1) * nw];
            let depth: f64 = row.iter().zip(&self.wz).map(|(s, w)| s * w.re).sum();
            total += wx * depth;
        }
        total
    }
}

/// Thin-ship wave resistance in newtons.
///
/// R_W = 4ρg²/(πU²) ∫₁^∞ |P + iQ|² λ²/√(λ²-1) dλ, evaluated with
/// λ = sec θ, which turns the weight into sec³θ on θ ∈ (0, π/2).
pub fn wave_resistance(hull: &HullForm, flow: &FlowConditions, settings: &MichellSettings) -> Result<f64> {
    let s = hull.dimensional();
    wave_resistance_surface(&s, flow, settings)
}

pub(crate) fn wave_resistance_surface(
    s: &DimensionalSurface,
    flow: &FlowConditions,
    settings: &MichellSettings,
) -> Result<f64> {
    let panels = settings.panels()?;
    let u = flow.speed;
    let g = flow.fluid.gravity;
    if !(u > 0.0) {
        return Err(Error::Numerical(format!("speed {u} must be positive")));
    }
    let k0 = g / (u * u);
    if !k0.is_finite() {
        return Err(Error::Numerical("wavenumber overflow".into()));
    }
    let slopes = longitudinal_slopes(s);
    let mut amp = Amplitude::new(s, &slopes);
    let (theta, weight) = composite_gauss_legendre(0.0, FRAC_PI_2, panels, settings.panel_order);

    let mut integral = 0.0;
    let mut running_max = 0.0f64;
    for (pt, pw) in theta
        .chunks(settings.panel_order)
        .zip(weight.chunks(settings.panel_order))
    {
        let mut panel_max = 0.0f64;
        for (&t, &w) in pt.iter().zip(pw) {
            let sec = 1.0 / t.cos();
            let f = amp.eval(k0 * sec * sec, k0 * sec);
            let value = f.norm_sqr() * sec * sec * sec;
            if !value.is_finite() {
                return Err(Error::Numerical(format!("non-finite integrand at θ = {t}")));
            }
            panel_max = panel_max.max(value);
            integral += w * value;
        }
        running_max = running_max.max(panel_max);
        if running_max > 0.0 && panel_max < settings.truncation * running_max {
            break;
        }
    }
    let rw = 4.0 * flow.fluid.density * g * g / (PI * u * u) * integral;
    if !rw.is_finite() {
        return Err(Error::Numerical("non-finite wave resistance".into()));
    }
    Ok(rw.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResistanceBreakdown {
    pub flow: FlowConditions,
    /// N
    pub frictional: f64,
    /// N
    pub wave: f64,
    /// N
    pub total: f64,
    /// R_T / (ρ g ∇)
    pub merit_coefficient: f64,
}

/// Evaluator that reuses the hydrostatics of one hull across speeds.
#[derive(Debug, Clone)]
pub struct HullEvaluator {
    surface: DimensionalSurface,
    pub hydrostatics: HydrostaticsReport,
    length: f64,
    pub fluid: Fluid,
    pub settings: MichellSettings,
}

impl HullEvaluator {
    pub fn new(hull: &HullForm, fluid: Fluid, settings: MichellSettings) -> Result<Self> {
        let hydrostatics = hydrostatics(hull)?;
        Ok(HullEvaluator {
            surface: hull.dimensional(),
            hydrostatics,
            length: hull.length(),
            fluid,
            settings,
        })
    }

    pub fn evaluate(&self, froude: f64) -> Result<ResistanceBreakdown> {
        if !(FN_BAND.0..=FN_BAND.1).contains(&froude) {
            return Err(Error::InvalidConfig(format!(
                "Fn = {froude} outside the supported band [{}, {}]",
                FN_BAND.0, FN_BAND.1
            )));
        }
        let flow = FlowConditions::new(self.length, froude, self.fluid)?;
        let frictional = frictional_from_area(self.hydrostatics.wetted_surface, &flow)?;
        let wave = wave_resistance_surface(&self.surface, &flow, &self.settings)?;
        let total = frictional + wave;
        let merit_coefficient =
            total / (self.fluid.density * self.fluid.gravity * self.hydrostatics.displaced_volume);
        Ok(ResistanceBreakdown {
            flow,
            frictional,
            wave,
            total,
            merit_coefficient,
        })
    }

    pub fn curve(&self, froude: &[f64]) -> Result<Vec<ResistanceBreakdown>> {
        froude.iter().map(|&f| self.evaluate(f)).collect()
    }
}

/// Resistance breakdown of `hull` at Froude number `froude` with default
/// fluid and quadrature settings.
pub fn evaluate(hull: &HullForm, froude: f64) -> Result<ResistanceBreakdown> {
    HullEvaluator::new(hull, Fluid::default(), MichellSettings::default())?.evaluate(froude)
}

/// Evaluate every `(hull, Fn)` pair in parallel. Output order follows the
/// input order: hull-major, then the order of `froude`.
pub fn evaluate_fleet(
    hulls: &[HullForm],
    froude: &[f64],
    fluid: Fluid,
    settings: MichellSettings,
) -> Result<Vec<Vec<ResistanceBreakdown>>> {
    hulls
        .par_iter()
        .map(|h| HullEvaluator::new(h, fluid, settings)?.curve(froude))
        .collect()
}

/// Operating-speed distribution over a Froude-number range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SpeedWeight {
    Uniform,
    /// Weights at the `n_points` equally spaced evaluation speeds.
    Tabulated(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedRange {
    pub fn_lower: f64,
    pub fn_upper: f64,
    pub n_points: usize,
    pub weight: SpeedWeight,
}

impl SpeedRange {
    pub fn uniform(fn_lower: f64, fn_upper: f64, n_points: usize) -> Result<Self> {
        let r = SpeedRange {
            fn_lower,
            fn_upper,
            n_points,
            weight: SpeedWeight::Uniform,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn tabulated(fn_lower: f64, fn_upper: f64, weights: Vec<f64>) -> Result<Self> {
        let r = SpeedRange {
            fn_lower,
            fn_upper,
            n_points: weights.len(),
            weight: SpeedWeight::Tabulated(weights),
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fn_lower > 0.0 && self.fn_lower < self.fn_upper && self.fn_upper.is_finite()) {
            return Err(Error::InvalidSpeedRange(format!(
                "need 0 < Fn_l < Fn_u, got [{}, {}]",
                self.fn_lower, self.fn_upper
            )));
        }
        if self.n_points < 2 {
            return Err(Error::InvalidSpeedRange(format!(
                "need at least 2 speeds, got {}",
                self.n_points
            )));
        }
        if let SpeedWeight::Tabulated(w) = &self.weight {
            if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidSpeedRange("weights must be non-negative".into()));
            }
            let total = trapezoid(&self.points(), w);
            if (total - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidSpeedRange(format!(
                    "weights integrate to {total}, not 1"
                )));
            }
        }
        Ok(())
    }

    /// Equally spaced evaluation speeds.
    pub fn points(&self) -> Vec<f64> {
        crate::geometry::linspace(self.fn_lower, self.fn_upper, self.n_points)
    }

    /// Weight at each evaluation speed.
    pub fn weights(&self) -> Vec<f64> {
        match &self.weight {
            SpeedWeight::Uniform => vec![1.0 / (self.fn_upper - self.fn_lower); self.n_points],
            SpeedWeight::Tabulated(w) => w.clone(),
        }
    }

    /// β from merit coefficients already evaluated at [`Self::points`].
    pub fn merit_on_points(&self, merit: &[f64]) -> Result<f64> {
        if merit.len() != self.n_points {
            return Err(Error::ShapeMismatch {
                expected: self.n_points,
                got: merit.len(),
            });
        }
        let w = self.weights();
        let weighted: Vec<f64> = w.iter().zip(merit).map(|(a, b)| a * b).collect();
        Ok(trapezoid(&self.points(), &weighted))
    }
}

fn interpolate(curve: &[(f64, f64)], x: f64) -> f64 {
    let k = curve.partition_point(|p| p.0 < x);
    if k < curve.len() && curve[k].0 == x {
        return curve[k].1;
    }
    let (a, b) = (curve[k - 1], curve[k]);
    a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
}

/// Operational merit β = ∫ w(Fn) C̄_T dFn, trapezoidal on the range's
/// evaluation points. The curve is linearly interpolated onto those points.
pub fn operational_merit(curve: &[(f64, f64)], range: &SpeedRange) -> Result<f64> {
    range.validate()?;
    if !curve.windows(2).all(|w| w[0].0 < w[1].0) {
        return Err(Error::Coverage("curve Froude numbers must be strictly increasing".into()));
    }
    let inside = curve
        .iter()
        .filter(|p| p.0 >= range.fn_lower && p.0 <= range.fn_upper)
        .count();
    let covered = curve.first().is_some_and(|p| p.0 <= range.fn_lower)
        && curve.last().is_some_and(|p| p.0 >= range.fn_upper);
    if !covered || inside < 2 {
        return Err(Error::Coverage(format!(
            "curve must span [{}, {}] with at least 2 points inside",
            range.fn_lower, range.fn_upper
        )));
    }
    let merit: Vec<f64> = range.points().iter().map(|&f| interpolate(curve, f)).collect();
    range.merit_on_points(&merit)
}

/// Hydro-computed β of a hull over `range`.
pub fn hull_merit(hull: &HullForm, range: &SpeedRange, fluid: Fluid, settings: MichellSettings) -> Result<f64> {
    let ev = HullEvaluator::new(hull, fluid, settings)?;
    let merit: Vec<f64> = range
        .points()
        .iter()
        .map(|&f| ev.evaluate(f).map(|r| r.merit_coefficient))
        .collect::<Result<_>>()?;
    range.merit_on_points(&merit)
}

/// CSV with columns `Fn,U,Re,R_F,R_W,R_T,C_T`.
pub fn curve_csv(curve: &[ResistanceBreakdown]) -> String {
    let mut s = String::from("Fn,U,Re,R_F,R_W,R_T,C_T\n");
    for r in curve {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.flow.froude, r.flow.speed, r.flow.reynolds, r.frictional, r.wave, r.total, r.merit_coefficient
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::wigley_grid;

    fn wigley(l: f64) -> HullForm {
        HullForm::new(wigley_grid(40, 20).unwrap(), l, 10.0, 2.5).unwrap()
    }

    #[test]
    fn ittc_line_values() {
        assert!((friction_coefficient(1e9).unwrap() - 0.075 / 49.0).abs() < 1e-15);
        assert!((friction_coefficient(1e7).unwrap() - 3.0e-3).abs() < 1e-15);
        assert!((friction_coefficient(1e12).unwrap() - 7.5e-4).abs() < 1e-15);
        assert!(matches!(friction_coefficient(100.0), Err(Error::SingularRegime(_))));
        assert!(friction_coefficient(-1.0).is_err());
    }

    #[test]
    fn flow_conditions_are_consistent() {
        let f = FlowConditions::new(100.0, 0.2, Fluid::default()).unwrap();
        assert!((f.speed - 0.2 * (9.81f64 * 100.0).sqrt()).abs() < 1e-12);
        assert!((f.froude - f.speed / (9.81f64 * 100.0).sqrt()).abs() < 1e-12);
        assert!((f.reynolds - f.speed * 100.0 / 1.016e-6).abs() / f.reynolds < 1e-12);
    }

    #[test]
    fn doubling_speed_scales_friction_by_cf_ratio() {
        let hull = wigley(100.0);
        let f1 = FlowConditions::new(100.0, 0.15, Fluid::default()).unwrap();
        let f2 = FlowConditions::new(100.0, 0.30, Fluid::default()).unwrap();
        let r1 = frictional_resistance(&hull, &f1).unwrap();
        let r2 = frictional_resistance(&hull, &f2).unwrap();
        let ratio = 4.0 * friction_coefficient(f2.reynolds).unwrap() / friction_coefficient(f1.reynolds).unwrap();
        assert!((r2 / r1 - ratio).abs() < 1e-12);
        assert!(r2 / r1 < 4.0);
    }

    #[test]
    fn zero_area_is_an_error() {
        let f = FlowConditions::new(100.0, 0.2, Fluid::default()).unwrap();
        assert!(matches!(frictional_from_area(0.0, &f), Err(Error::DegenerateHull(_))));
    }

    #[test]
    fn slopes_are_exact_for_quadratics() {
        let grid = wigley_grid(13, 4).unwrap();
        let hull = HullForm::new(grid, 50.0, 5.0, 2.0).unwrap();
        let s = hull.dimensional();
        let d = longitudinal_slopes(&s);
        let (l, b, t) = (50.0, 10.0, 5.0);
        for i in 0..13 {
            for j in 0..4 {
                let xi = 2.0 * s.x[i] / l - 1.0;
                let zeta = s.z[j] / t;
                let exact = -(2.0 * b / l) * xi * (1.0 - zeta * zeta);
                assert!((d[i * 4 + j] - exact).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hat_weights_match_series_and_closed_form() {
        for w in [
            Complex64::new(0.49, 0.0),
            Complex64::new(0.0, 0.49),
            Complex64::new(0.51, 0.0),
            Complex64::new(0.0, 0.51),
        ] {
            let (a, b) = hat_moments(w);
            // independent midpoint-rule check
            let n = 20000;
            let mut ra = Complex64::new(0.0, 0.0);
            let mut rb = Complex64::new(0.0, 0.0);
            for k in 0..n {
                let s = (k as f64 + 0.5) / n as f64;
                let e = (-w * s).exp() / n as f64;
                ra += e * (1.0 - s);
                rb += e * s;
            }
            assert!((a - ra).norm() < 1e-9, "{w}");
            assert!((b - rb).norm() < 1e-9, "{w}");
        }
    }

    #[test]
    fn wave_resistance_is_quadratic_in_thickness() {
        let base = wigley(100.0);
        let thick = HullForm::new(base.grid.scaled(2.0), 100.0, 10.0, 2.5).unwrap();
        let flow = FlowConditions::new(100.0, 0.27, Fluid::default()).unwrap();
        let s = MichellSettings::default();
        let r1 = wave_resistance(&base, &flow, &s).unwrap();
        let r2 = wave_resistance(&thick, &flow, &s).unwrap();
        assert!((r2 / r1 - 4.0).abs() < 1e-6 * 4.0);
    }

    #[test]
    fn wave_resistance_vanishes_at_low_speed() {
        let hull = wigley(100.0);
        let r = evaluate(&hull, 0.05).unwrap();
        assert!(r.wave / r.frictional < 0.01, "{r:?}");
        assert!(r.wave >= 0.0);
    }

    #[test]
    fn breakdown_sums() {
        let r = evaluate(&wigley(100.0), 0.3).unwrap();
        assert_eq!(r.total, r.frictional + r.wave);
        assert!(r.merit_coefficient > 0.0);
        assert!(evaluate(&wigley(100.0), 0.7).is_err());
    }

    #[test]
    fn settings_must_tile_into_panels() {
        let hull = wigley(100.0);
        let flow = FlowConditions::new(100.0, 0.2, Fluid::default()).unwrap();
        let bad = MichellSettings::with_nodes(250);
        assert!(matches!(wave_resistance(&hull, &flow, &bad), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn merit_of_constant_and_linear_curves() {
        let r = SpeedRange::uniform(0.2, 0.24, 5).unwrap();
        let constant: Vec<(f64, f64)> = r.points().iter().map(|&f| (f, 0.0017)).collect();
        assert!((operational_merit(&constant, &r).unwrap() - 0.0017).abs() < 1e-15);
        let linear: Vec<(f64, f64)> = [0.2, 0.24].iter().map(|&f| (f, 1.0 + 10.0 * (f - 0.2))).collect();
        let beta = operational_merit(&linear, &r).unwrap();
        assert!((beta - 1.2).abs() < 1e-12);
    }

    #[test]
    fn coverage_and_range_errors() {
        let r = SpeedRange::uniform(0.2, 0.3, 3).unwrap();
        let short = vec![(0.2, 1.0), (0.25, 1.0)];
        assert!(matches!(operational_merit(&short, &r), Err(Error::Coverage(_))));
        let unordered = vec![(0.3, 1.0), (0.2, 1.0)];
        assert!(operational_merit(&unordered, &r).is_err());
        assert!(SpeedRange::uniform(0.25, 0.25, 5).is_err());
        assert!(SpeedRange::uniform(0.2, 0.3, 1).is_err());
        assert!(SpeedRange::tabulated(0.2, 0.3, vec![1.0, 1.0, 1.0]).is_err());
        assert!(SpeedRange::tabulated(0.2, 0.3, vec![10.0, -0.1, 10.0]).is_err());
    }

    #[test]
    fn tabulated_weight_on_upper_half() {
        // weight 0 on the lower half and 20 on the upper half of [0.2, 0.3],
        // piecewise linear between the nodes
        let n = 11;
        let range0 = SpeedRange::uniform(0.2, 0.3, n).unwrap();
        let pts = range0.points();
        let raw: Vec<f64> = pts.iter().map(|&f| if f > 0.25 + 1e-12 { 1.0 } else { 0.0 }).collect();
        let norm = trapezoid(&pts, &raw);
        let w: Vec<f64> = raw.iter().map(|v| v / norm).collect();
        let range = SpeedRange::tabulated(0.2, 0.3, w.clone()).unwrap();
        let curve: Vec<(f64, f64)> = pts.iter().map(|&f| (f, 2.0 + 5.0 * f)).collect();
        let beta = operational_merit(&curve, &range).unwrap();
        // fine-grid oracle on the piecewise-linear weight times the linear curve
        let m = 200_000;
        let mut oracle = 0.0;
        let h = 0.1 / m as f64;
        for k in 0..m {
            let f = 0.2 + (k as f64 + 0.5) * h;
            let seg = (((f - 0.2) / 0.01).floor() as usize).min(n - 2);
            let t = (f - pts[seg]) / (pts[seg + 1] - pts[seg]);
            let wf = w[seg] + t * (w[seg + 1] - w[seg]);
            let cf = 2.0 + 5.0 * f;
            oracle += wf * cf * h;
        }
        // trapezoid on w·C vs exact integral of (linear w)(linear C): O(h²) gap
        assert!((beta - oracle).abs() / oracle < 1e-3, "{beta} {oracle}");
        assert!(beta > 2.0 + 5.0 * 0.25);
    }

    #[test]
    fn parallel_fleet_keeps_order() {
        let hulls: Vec<HullForm> = [80.0, 100.0, 150.0].iter().map(|&l| wigley(l)).collect();
        let fns = [0.2, 0.25, 0.3];
        let out = evaluate_fleet(&hulls, &fns, Fluid::default(), MichellSettings::default()).unwrap();
        for (h, row) in hulls.iter().zip(&out) {
            for (f, r) in fns.iter().zip(row) {
                assert_eq!(*r, evaluate(h, *f).unwrap());
            }
        }
    }
}
