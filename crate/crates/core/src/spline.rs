//! Periodic cubic spline through the vertices of a closed polyline, used for
//! arclength reparametrization.

use crate::geometry::Point;
use crate::linalg::CyclicTridiagonal;

// 8-point Gauss-Legendre rule on [-1, 1].
const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// Interpolating C² periodic cubic, parametrized by cumulative chord length.
#[derive(Clone, Debug)]
pub struct PeriodicSpline {
    points: Vec<Point>,
    knots: Vec<f64>,
    second: Vec<Point>,
    // Arclength of the spline from knot 0 to knot i (len n + 1).
    arclength: Vec<f64>,
}

impl PeriodicSpline {
    pub fn through(points: &[Point]) -> Self {
        let n = points.len();
        let h: Vec<f64> = (0..n)
            .map(|i| (points[(i + 1) % n] - points[i]).norm())
            .collect();
        let mut knots = Vec::with_capacity(n + 1);
        knots.push(0.0);
        for hi in &h {
            knots.push(knots.last().unwrap() + hi);
        }

        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut rx = vec![0.0; n];
        let mut ry = vec![0.0; n];
        for i in 0..n {
            let hp = h[(i + n - 1) % n];
            let hn = h[i];
            lower[i] = hp / 6.0;
            diag[i] = (hp + hn) / 3.0;
            upper[i] = hn / 6.0;
            let r =
                (points[(i + 1) % n] - points[i]) / hn - (points[i] - points[(i + n - 1) % n]) / hp;
            rx[i] = r.x;
            ry[i] = r.y;
        }
        let system = CyclicTridiagonal::new(&lower, &diag, &upper);
        let mx = system.solve(&rx);
        let my = system.solve(&ry);
        let second = mx
            .into_iter()
            .zip(my)
            .map(|(x, y)| Point::new(x, y))
            .collect();

        let mut spline = Self {
            points: points.to_vec(),
            knots,
            second,
            arclength: Vec::new(),
        };
        let mut acc = vec![0.0; n + 1];
        for i in 0..n {
            acc[i + 1] = acc[i] + spline.segment_length(i, spline.knots[i + 1]);
        }
        spline.arclength = acc;
        spline
    }

    pub fn total_length(&self) -> f64 {
        *self.arclength.last().unwrap()
    }

    fn segment(&self, i: usize) -> (f64, Point, Point, Point, Point) {
        let n = self.points.len();
        let j = (i + 1) % n;
        let h = self.knots[i + 1] - self.knots[i];
        (
            h,
            self.points[i],
            self.points[j],
            self.second[i],
            self.second[j],
        )
    }

    fn eval_in(&self, i: usize, u: f64) -> Point {
        let (h, p0, p1, m0, m1) = self.segment(i);
        let a = (self.knots[i + 1] - u) / h;
        let b = (u - self.knots[i]) / h;
        p0 * a + p1 * b + (m0 * (a * a * a - a) + m1 * (b * b * b - b)) * (h * h / 6.0)
    }

    fn speed_in(&self, i: usize, u: f64) -> f64 {
        let (h, p0, p1, m0, m1) = self.segment(i);
        let a = (self.knots[i + 1] - u) / h;
        let b = (u - self.knots[i]) / h;
        let d = (p1 - p0) / h + (m1 * (3.0 * b * b - 1.0) - m0 * (3.0 * a * a - 1.0)) * (h / 6.0);
        d.norm()
    }

    // Arclength from knot i to parameter u within segment i.
    fn segment_length(&self, i: usize, u: f64) -> f64 {
        let u0 = self.knots[i];
        let half = 0.5 * (u - u0);
        let mid = 0.5 * (u + u0);
        GL_NODES
            .iter()
            .zip(GL_WEIGHTS.iter())
            .map(|(x, w)| w * self.speed_in(i, mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Point at spline arclength `s` measured from vertex 0, `s` in `[0, total)`.
    pub fn at_arclength(&self, s: f64) -> Point {
        let n = self.points.len();
        let s = s.rem_euclid(self.total_length());
        let i = match self
            .arclength
            .binary_search_by(|probe| probe.partial_cmp(&s).unwrap())
        {
            Ok(k) => return self.points[k % n],
            Err(k) => k - 1,
        };
        let target = s - self.arclength[i];
        let (mut lo, mut hi) = (self.knots[i], self.knots[i + 1]);
        let seg_len = self.arclength[i + 1] - self.arclength[i];
        let mut u = lo + (hi - lo) * target / seg_len;
        for _ in 0..50 {
            let f = self.segment_length(i, u) - target;
            if f.abs() <= 1e-15 * self.total_length().max(1.0) {
                break;
            }
            if f > 0.0 {
                hi = u;
            } else {
                lo = u;
            }
            let step = f / self.speed_in(i, u);
            let next = u - step;
            u = if next > lo && next < hi {
                next
            } else {
                0.5 * (lo + hi)
            };
        }
        self.eval_in(i, u)
    }
}
