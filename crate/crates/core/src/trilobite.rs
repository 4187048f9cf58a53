//! Integrals of `H` and `HK` over surfaces of revolution, and the trilobite
//! assembly whose total mean curvature vanishes while `∫HK` is large.
//!
//! A profile `γ(s) = (x, y)` in the half-plane `x > 0` is rotated about the
//! y-axis. With unit tangent `(ẋ, ẏ)` and normal `(ẏ, -ẋ)`,
//!
//! `∫H dμ = 2π ∫ xκ ds + 2π (y(b) - y(a))`, `∫HK dμ = 2π ∫ ẏκ² + κẏ²/x ds`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::flow::secant;
use crate::geometry::Point;
use crate::quadrature::integrate;

const QUAD_TOL: f64 = 1e-10;
const AXIS_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SegmentKind {
    /// Counterclockwise arc `center + radius (cos θ, sin θ)`, `θ₁ < θ₂`.
    Arc {
        center: Point,
        radius: f64,
        theta1: f64,
        theta2: f64,
    },
    Line {
        start: Point,
        end: Point,
    },
}

/// A profile piece; `flipped` reverses the normal and negates both integrals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileSegment {
    pub kind: SegmentKind,
    pub flipped: bool,
}

impl ProfileSegment {
    pub fn arc(center: Point, radius: f64, theta1: f64, theta2: f64) -> Result<Self> {
        if !(radius > 0.0) || !(theta1 < theta2) {
            return Err(Error::ParameterDomain(format!(
                "arc needs a positive radius and increasing angles, got {radius}, [{theta1}, {theta2}]"
            )));
        }
        Ok(Self {
            kind: SegmentKind::Arc {
                center,
                radius,
                theta1,
                theta2,
            },
            flipped: false,
        })
    }

    pub fn line(start: Point, end: Point) -> Result<Self> {
        if (end - start).norm() == 0.0 {
            return Err(Error::ParameterDomain(
                "line segment has zero length".into(),
            ));
        }
        Ok(Self {
            kind: SegmentKind::Line { start, end },
            flipped: false,
        })
    }

    pub fn flip(mut self) -> Self {
        self.flipped = !self.flipped;
        self
    }

    pub fn translated(mut self, offset: Point) -> Self {
        match &mut self.kind {
            SegmentKind::Arc { center, .. } => *center += offset,
            SegmentKind::Line { start, end } => {
                *start += offset;
                *end += offset;
            }
        }
        self
    }

    fn sign(&self) -> f64 {
        if self.flipped {
            -1.0
        } else {
            1.0
        }
    }

    /// Area of the surface swept by the piece, `2π ∫ x ds`.
    pub fn area(&self) -> f64 {
        match self.kind {
            SegmentKind::Arc {
                center,
                radius,
                theta1,
                theta2,
            } => {
                2.0 * PI
                    * radius
                    * (center.x * (theta2 - theta1) + radius * (theta2.sin() - theta1.sin()))
            }
            SegmentKind::Line { start, end } => PI * (end - start).norm() * (start.x + end.x),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntegralSource {
    ClosedForm,
    Quadrature,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PieceIntegrals {
    pub int_h: f64,
    /// Exact value, or the midpoint of `int_hk_bounds` when only bounds are known.
    pub int_hk: f64,
    pub int_hk_bounds: Option<(f64, f64)>,
    pub source: IntegralSource,
}

impl PieceIntegrals {
    fn exact(int_h: f64, int_hk: f64, source: IntegralSource) -> Self {
        Self {
            int_h,
            int_hk,
            int_hk_bounds: None,
            source,
        }
    }

    fn signed(mut self, sign: f64) -> Self {
        self.int_h *= sign;
        self.int_hk *= sign;
        self.int_hk_bounds = self.int_hk_bounds.map(|(lo, hi)| {
            let (a, b) = (sign * lo, sign * hi);
            (a.min(b), a.max(b))
        });
        self
    }
}

/// Adaptive Gauss-Kronrod evaluation of both integrals; the reference values.
pub fn quadrature_integrals(segment: &ProfileSegment) -> Result<PieceIntegrals> {
    let out = match segment.kind {
        SegmentKind::Arc {
            center,
            radius,
            theta1,
            theta2,
        } => {
            let x = |t: f64| center.x + radius * t.cos();
            let mut min_x = x(theta1).min(x(theta2));
            if (theta1..=theta2).contains(&PI) || (theta1..=theta2).contains(&-PI) {
                min_x = min_x.min(center.x - radius);
            }
            if min_x < AXIS_EPS * radius && center.x != 0.0 {
                return Err(Error::AxisSingularity);
            }
            // κ = 1/ρ, ds = ρ dθ, ẏ = cos θ.
            let h = 2.0 * PI * integrate(x, theta1, theta2, QUAD_TOL)
                + 2.0 * PI * radius * (theta2.sin() - theta1.sin());
            let hk_density = |t: f64| {
                let c = t.cos();
                let tail = if center.x == 0.0 {
                    c / radius
                } else {
                    c * c / x(t)
                };
                c / radius + tail
            };
            let hk = 2.0 * PI * integrate(hk_density, theta1, theta2, QUAD_TOL);
            PieceIntegrals::exact(h, hk, IntegralSource::Quadrature)
        }
        SegmentKind::Line { start, end } => {
            let len = (end - start).norm();
            // Straight profiles have κ = 0, so only the boundary term survives.
            let zero = |_: f64| 0.0;
            let h = 2.0 * PI * integrate(zero, 0.0, len, QUAD_TOL) + 2.0 * PI * (end.y - start.y);
            let hk = 2.0 * PI * integrate(zero, 0.0, len, QUAD_TOL);
            PieceIntegrals::exact(h, hk, IntegralSource::Quadrature)
        }
    };
    Ok(out.signed(segment.sign()))
}

/// Closed forms for spheres, cylinders, flat annuli and arcs; the arc `∫HK`
/// is an interval when the axis distance `x̃` of the center exceeds the radius.
pub fn closed_form_integrals(segment: &ProfileSegment) -> Result<PieceIntegrals> {
    let out = match segment.kind {
        SegmentKind::Arc {
            center,
            radius: r,
            theta1,
            theta2,
        } => {
            let dsin = theta2.sin() - theta1.sin();
            let dtheta = theta2 - theta1;
            let h = 4.0 * PI * r * dsin + 2.0 * PI * center.x * dtheta;
            if center.x == 0.0 {
                PieceIntegrals::exact(h, 4.0 * PI * dsin / r, IntegralSource::ClosedForm)
            } else if center.x > r {
                let cos2 = 0.5 * ((2.0 * theta2).sin() - (2.0 * theta1).sin()) + dtheta;
                let base = 2.0 * PI * dsin / r;
                let lo = base + PI * cos2 / (center.x + r);
                let hi = base + PI * cos2 / (center.x - r);
                PieceIntegrals {
                    int_h: h,
                    int_hk: 0.5 * (lo + hi),
                    int_hk_bounds: Some((lo, hi)),
                    source: IntegralSource::ClosedForm,
                }
            } else {
                return Err(Error::UnsupportedSegment(format!(
                    "arc with center distance {} not above radius {r}",
                    center.x
                )));
            }
        }
        SegmentKind::Line { start, end } => {
            let d = end - start;
            if d.x != 0.0 && d.y != 0.0 {
                return Err(Error::UnsupportedSegment("cone".into()));
            }
            PieceIntegrals::exact(2.0 * PI * d.y, 0.0, IntegralSource::ClosedForm)
        }
    };
    Ok(out.signed(segment.sign()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedSegment {
    pub name: String,
    pub segment: ProfileSegment,
}

/// Segments counted `weight` times (negative weights remove area only).
#[derive(Clone, Debug, PartialEq)]
pub struct PieceGroup {
    pub name: String,
    pub weight: f64,
    pub segments: Vec<NamedSegment>,
    /// Area-only groups carry no curvature integrals.
    pub area_only: bool,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Surface {
    pub groups: Vec<PieceGroup>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceTotals {
    pub int_h: f64,
    pub int_hk: f64,
    pub area: f64,
}

impl Surface {
    pub fn single(name: &str, segments: Vec<ProfileSegment>) -> Self {
        Self {
            groups: vec![PieceGroup {
                name: name.to_string(),
                weight: 1.0,
                segments: segments
                    .into_iter()
                    .enumerate()
                    .map(|(k, segment)| NamedSegment {
                        name: format!("{name}.{k}"),
                        segment,
                    })
                    .collect(),
                area_only: false,
            }],
        }
    }

    pub fn translated(&self, offset: Point) -> Self {
        let mut out = self.clone();
        for g in &mut out.groups {
            for s in &mut g.segments {
                s.segment = s.segment.translated(offset);
            }
        }
        out
    }

    /// Weighted totals from the quadrature oracle.
    pub fn totals(&self) -> Result<SurfaceTotals> {
        let mut t = SurfaceTotals {
            int_h: 0.0,
            int_hk: 0.0,
            area: 0.0,
        };
        for g in &self.groups {
            for s in &g.segments {
                t.area += g.weight * s.segment.area();
                if !g.area_only {
                    let q = quadrature_integrals(&s.segment)?;
                    t.int_h += g.weight * q.int_h;
                    t.int_hk += g.weight * q.int_hk;
                }
            }
        }
        Ok(t)
    }
}

/// `dH̄/dt` at `t = 0` for a surface with `∫H = 0`: `-2 ∫HK / |M|`.
pub fn hbar_derivative_at_zero(surface: &Surface) -> Result<f64> {
    let t = surface.totals()?;
    if t.int_h.abs() > 1e-6 * t.area {
        return Err(Error::NotBalanced {
            total_h: t.int_h,
            area: t.area,
        });
    }
    Ok(-2.0 * t.int_hk / t.area)
}

/// The closed-form cylinder length that balances `∫H` according to the
/// accountancy table of the construction.
pub fn l_of_r(rho: f64, n: usize, r: f64) -> Result<f64> {
    let nf = n as f64;
    let denom = nf - 3.0 - 1.0 / (2.0 * PI);
    if denom <= 0.0 {
        return Err(Error::ParameterDomain(format!(
            "n = {n} leaves n - 3 - 1/(2 pi) = {denom} <= 0"
        )));
    }
    Ok(
        ((11.0 * PI / 3.0 + 1.0 / PI - 4.0) * nf * rho
            + (2.0 - 3f64.sqrt() - 1.0 / (2.0 * PI)) * r)
            / denom,
    )
}

#[derive(Clone, Debug)]
pub struct Trilobite {
    pub rho: f64,
    pub n: usize,
    pub r: f64,
    /// Cylinder length from [`l_of_r`].
    pub l_formula: f64,
    /// Cylinder length actually used to build `surface`.
    pub l: f64,
    pub surface: Surface,
    pub totals: SurfaceTotals,
}

fn named(name: &str, segment: ProfileSegment) -> NamedSegment {
    NamedSegment {
        name: name.to_string(),
        segment,
    }
}

/// Profile pieces for cylinder length `l`.
///
/// Capped cylinder (own axis, normal into the tube): fillet arc from the
/// plane, cylinder wall, hemispherical bottom. Global body: top disk of
/// radius `2nρ`, rim arc of radius `l`, cone of slope √3, spherical cap of
/// radius `r` on the axis. The `n` cylinder mouths are cut out of the disk.
pub fn build_surface(rho: f64, n: usize, r: f64, l: f64) -> Result<Surface> {
    if !(rho > 0.0 && r > 0.0 && l > 0.0) {
        return Err(Error::ParameterDomain(format!(
            "need rho, r, l > 0, got {rho}, {r}, {l}"
        )));
    }
    let nf = n as f64;
    let s3 = 3f64.sqrt();
    let cylinder = PieceGroup {
        name: "Q".into(),
        weight: nf,
        segments: vec![
            named(
                "Q.fillet",
                ProfileSegment::arc(Point::new(2.0 * rho, -rho), rho, PI / 2.0, PI)?,
            ),
            named(
                "Q.cylinder",
                ProfileSegment::line(Point::new(rho, -rho), Point::new(rho, -rho - l))?,
            ),
            named(
                "Q.hemisphere",
                ProfileSegment::arc(Point::new(0.0, -rho - l), rho, -PI / 2.0, 0.0)?.flip(),
            ),
        ],
        area_only: false,
    };
    let mouths = PieceGroup {
        name: "mouths".into(),
        weight: -nf,
        segments: vec![named(
            "mouth",
            ProfileSegment::line(Point::new(2.0 * rho, 0.0), Point::zeros())?,
        )],
        area_only: true,
    };
    let y_tip = -3.0 * l - 2.0 * s3 * nf * rho;
    let body = PieceGroup {
        name: "body".into(),
        weight: 1.0,
        segments: vec![
            named(
                "disk",
                ProfileSegment::line(Point::new(2.0 * nf * rho, 0.0), Point::zeros())?,
            ),
            named(
                "rim",
                ProfileSegment::arc(Point::new(2.0 * nf * rho, -l), l, -PI / 6.0, PI / 2.0)?,
            ),
            named(
                "cone",
                ProfileSegment::line(
                    Point::new(s3 * r / 2.0, y_tip + 1.5 * r),
                    Point::new(2.0 * nf * rho + s3 * l / 2.0, -1.5 * l),
                )?,
            ),
            named(
                "cap",
                ProfileSegment::arc(Point::new(0.0, y_tip + 2.0 * r), r, -PI / 2.0, -PI / 6.0)?,
            ),
        ],
        area_only: false,
    };
    Ok(Surface {
        groups: vec![cylinder, mouths, body],
    })
}

/// The construction with the cylinder length given by [`l_of_r`].
pub fn assemble_trilobite(rho: f64, n: usize, r: f64) -> Result<Trilobite> {
    let l = l_of_r(rho, n, r)?;
    finish(rho, n, r, l, l)
}

/// The construction with `l` solved so that the oracle `∫H` vanishes,
/// starting from [`l_of_r`].
pub fn assemble_balanced(rho: f64, n: usize, r: f64) -> Result<Trilobite> {
    let l0 = l_of_r(rho, n, r)?;
    let total_h = |l: f64| {
        build_surface(rho, n, r, l)
            .and_then(|s| s.totals())
            .map_or(f64::NAN, |t| t.int_h)
    };
    let scale = build_surface(rho, n, r, l0)?.totals()?.area;
    let l = secant(total_h, l0, 1.01 * l0, 1e-13 * scale)
        .filter(|l| *l > 0.0)
        .ok_or_else(|| {
            Error::ParameterDomain(format!("no positive balancing length for n = {n}"))
        })?;
    finish(rho, n, r, l0, l)
}

fn finish(rho: f64, n: usize, r: f64, l_formula: f64, l: f64) -> Result<Trilobite> {
    let surface = build_surface(rho, n, r, l)?;
    let totals = surface.totals()?;
    Ok(Trilobite {
        rho,
        n,
        r,
        l_formula,
        l,
        surface,
        totals,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub piece: String,
    pub int_h_oracle: f64,
    pub int_h_table: Option<f64>,
    pub int_hk_oracle: f64,
    /// Table value, bound (`>=x`), or a sign statement.
    pub int_hk_table: String,
}

impl Trilobite {
    /// Oracle values next to the accountancy table, one row per piece plus totals.
    pub fn report(&self) -> Result<Vec<ReportRow>> {
        let (rho, nf, r, l) = (self.rho, self.n as f64, self.r, self.l);
        let s3 = 3f64.sqrt();
        let table = |name: &str| -> (Option<f64>, String) {
            match name {
                "Q.fillet" => (
                    Some(2.0 * PI * rho * (PI - 2.0)),
                    format!(">={}", PI * PI / (6.0 * rho) - 2.0 * PI / rho),
                ),
                "Q.cylinder" => (Some(-2.0 * PI * l), "0".into()),
                "Q.hemisphere" => (Some(-4.0 * PI * rho), format!("{}", -4.0 * PI / rho)),
                "disk" => (Some(0.0), "0".into()),
                "rim" => (
                    Some(6.0 * PI * l + 8.0 / 3.0 * nf * PI * PI * rho),
                    "positive".into(),
                ),
                "cone" => (Some(2.0 * nf * rho + l - r), "0".into()),
                "cap" => (
                    Some(2.0 * PI * (2.0 - s3) * r),
                    format!("{}", 2.0 * PI * (2.0 - s3) / r),
                ),
                _ => (None, String::new()),
            }
        };
        let mut rows = Vec::new();
        for g in self.surface.groups.iter().filter(|g| !g.area_only) {
            let mut group_h = 0.0;
            let mut group_hk = 0.0;
            for s in &g.segments {
                let q = quadrature_integrals(&s.segment)?;
                group_h += q.int_h;
                group_hk += q.int_hk;
                let (h, hk) = table(&s.name);
                rows.push(ReportRow {
                    piece: s.name.clone(),
                    int_h_oracle: q.int_h,
                    int_h_table: h,
                    int_hk_oracle: q.int_hk,
                    int_hk_table: hk,
                });
            }
            if g.name == "Q" {
                rows.push(ReportRow {
                    piece: "P (n capped cylinders)".into(),
                    int_h_oracle: g.weight * group_h,
                    int_h_table: Some(2.0 * nf * PI * (-(4.0 - PI) * rho - l)),
                    int_hk_oracle: g.weight * group_hk,
                    int_hk_table: format!(">={}", -6.0 * nf * PI / rho),
                });
            }
        }
        let paper_total_h = 2.0
            * PI
            * ((3.0 + 1.0 / (2.0 * PI) - nf) * l
                + (11.0 / 3.0 * PI + 1.0 / PI - 4.0) * nf * rho
                + (2.0 - s3 - 1.0 / (2.0 * PI)) * r);
        rows.push(ReportRow {
            piece: "total".into(),
            int_h_oracle: self.totals.int_h,
            int_h_table: Some(paper_total_h),
            int_hk_oracle: self.totals.int_hk,
            int_hk_table: format!(">={}", 2.0 * PI * (2.0 - s3) / r - 6.0 * nf * PI / rho),
        });
        Ok(rows)
    }

    pub fn report_csv(&self) -> Result<String> {
        let mut out =
            String::from("piece,intH_oracle,intH_table,intHK_oracle,intHK_table_or_bound\n");
        for row in self.report()? {
            let h_table = row.int_h_table.map_or(String::new(), |v| v.to_string());
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                row.piece, row.int_h_oracle, h_table, row.int_hk_oracle, row.int_hk_table
            );
        }
        let derivative = match hbar_derivative_at_zero(&self.surface) {
            Ok(v) => v.to_string(),
            Err(e) => format!("error: {e}"),
        };
        let _ = writeln!(out, "area,{},,,", self.totals.area);
        let _ = writeln!(out, "l_used,{},,,", self.l);
        let _ = writeln!(out, "l_formula,{},,,", self.l_formula);
        let _ = writeln!(out, "dHbar_dt_at_0,{derivative},,,");
        Ok(out)
    }
}
