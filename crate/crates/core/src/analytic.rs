//! Closed-form two-node and three-node markets with linear curves.
//!
//! Curves are given in inverse form `price = intercept + slope * quantity`.
//! All surpluses are exact triangle and trapezoid areas.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearCurve {
    pub intercept: f64,
    pub slope: f64,
}

impl LinearCurve {
    pub fn new(intercept: f64, slope: f64) -> Self {
        Self { intercept, slope }
    }

    pub fn price(&self, quantity: f64) -> f64 {
        self.intercept + self.slope * quantity
    }

    /// Quantity on the (unclipped) line at `price`.
    pub fn quantity(&self, price: f64) -> f64 {
        (price - self.intercept) / self.slope
    }

    fn check_demand(&self, name: &str) -> Result<()> {
        if !(self.slope < 0.0) || !self.intercept.is_finite() {
            return Err(Error::Domain(format!("{name}: demand slope must be negative")));
        }
        Ok(())
    }

    fn check_supply(&self, name: &str) -> Result<()> {
        if !(self.slope > 0.0) || !self.intercept.is_finite() || !self.slope.is_finite() {
            return Err(Error::Domain(format!("{name}: supply slope must be positive")));
        }
        Ok(())
    }
}

/// Consumer surplus of a demand curve at `price` (zero when priced out).
pub fn consumer_surplus(d: &LinearCurve, price: f64) -> f64 {
    let q = d.quantity(price).max(0.0);
    0.5 * (d.intercept - price).max(0.0) * q
}

/// Producer surplus of a supply curve at `price` (zero below its intercept).
pub fn producer_surplus(s: &LinearCurve, price: f64) -> f64 {
    let q = s.quantity(price).max(0.0);
    0.5 * (price - s.intercept).max(0.0) * q
}

/// Net demand `a + b·price` of one node: the import curve `D − S` or, negated,
/// the export curve `S − D`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Affine {
    a: f64,
    b: f64,
}

impl Affine {
    fn net_demand(d: &LinearCurve, s: &LinearCurve) -> Self {
        Self {
            a: -d.intercept / d.slope + s.intercept / s.slope,
            b: 1.0 / d.slope - 1.0 / s.slope,
        }
    }

    fn at(&self, p: f64) -> f64 {
        self.a + self.b * p
    }

    fn inverse(&self, v: f64) -> f64 {
        (v - self.a) / self.b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoNodeSolution {
    /// Autarky prices `[π₁*, π₂*]`.
    pub autarky: [f64; 2],
    /// Price when the line is unconstrained.
    pub common_price: f64,
    /// Unconstrained flow from node 2 to node 1 (negative when node 1 exports).
    pub unconstrained_flow: f64,
    /// Line capacity used for the capped quantities below.
    pub capacity: f64,
    /// Prices `[π₁′, π₂′]` with the capacity in place.
    pub prices: [f64; 2],
    /// Flow from node 2 to node 1.
    pub flow: f64,
    /// Surplus gain of each node (consumer plus producer) relative to autarky.
    pub welfare_gain: [f64; 2],
    /// `(π₁′ − π₂′) · flow`.
    pub congestion_rent: f64,
    /// Optimal capacity for the given marginal cost, when one was given.
    pub optimal_capacity: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TwoNodeInput {
    Capacity(f64),
    MarginalCost(f64),
}

/// Two connected nodes each with one demand and one supply curve.
pub fn solve_two_node(
    d1: LinearCurve,
    s1: LinearCurve,
    d2: LinearCurve,
    s2: LinearCurve,
    input: TwoNodeInput,
) -> Result<TwoNodeSolution> {
    d1.check_demand("d1")?;
    d2.check_demand("d2")?;
    s1.check_supply("s1")?;
    s2.check_supply("s2")?;
    let imp = Affine::net_demand(&d1, &s1);
    let exp2 = Affine::net_demand(&d2, &s2);
    let exp = Affine {
        a: -exp2.a,
        b: -exp2.b,
    };
    let denom = exp.b - imp.b;
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::Degenerate("import and export curves are parallel".into()));
    }
    let p1 = imp.inverse(0.0);
    let p2 = exp.inverse(0.0);
    let common = (imp.a - exp.a) / denom;
    let fbar = imp.at(common);

    // Price gap π₁ − π₂ as a function of the flow into node 1.
    let gap = |f: f64| imp.inverse(f) - exp.inverse(f);
    let (capacity, optimal) = match input {
        TwoNodeInput::Capacity(c) => {
            if !(c >= 0.0) {
                return Err(Error::Domain("capacity must be nonnegative".into()));
            }
            (c, None)
        }
        TwoNodeInput::MarginalCost(c) => {
            if !(c >= 0.0) {
                return Err(Error::Domain("marginal cost must be nonnegative".into()));
            }
            let gap0 = (p1 - p2).abs();
            let x = if gap0 <= c {
                0.0
            } else {
                // |gap| falls linearly from gap0 at zero flow to 0 at |f̄|.
                fbar.abs() * (gap0 - c) / gap0
            };
            (x, Some(x))
        }
    };
    let flow = fbar.signum() * capacity.min(fbar.abs());
    let prices = [imp.inverse(flow), exp.inverse(flow)];
    debug_assert!((gap(flow) - (prices[0] - prices[1])).abs() < 1e-9 * (1.0 + gap(flow).abs()));
    let node_surplus = |d: &LinearCurve, s: &LinearCurve, p: f64| consumer_surplus(d, p) + producer_surplus(s, p);
    let welfare_gain = [
        node_surplus(&d1, &s1, prices[0]) - node_surplus(&d1, &s1, p1),
        node_surplus(&d2, &s2, prices[1]) - node_surplus(&d2, &s2, p2),
    ];
    Ok(TwoNodeSolution {
        autarky: [p1, p2],
        common_price: common,
        unconstrained_flow: fbar,
        capacity,
        prices,
        flow,
        welfare_gain,
        congestion_rent: (prices[0] - prices[1]) * flow,
        optimal_capacity: optimal,
    })
}

impl TwoNodeSolution {
    /// Node 1 gain read off the import-curve graph: the triangle between the
    /// import curve and the price axis from π₁′ to π₁*.
    pub fn import_triangle(&self) -> f64 {
        0.5 * (self.autarky[0] - self.prices[0]) * self.flow
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketState {
    pub price: f64,
    pub cs: [f64; 3],
    pub ps: [f64; 3],
    pub tw: [f64; 3],
    pub system: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThreeNodeSolution {
    /// Line 1–2 only.
    pub old: MarketState,
    /// Lines 1–2 and 2–3, one joint market.
    pub new: MarketState,
}

impl ThreeNodeSolution {
    pub fn delta_tw(&self) -> [f64; 3] {
        std::array::from_fn(|i| self.new.tw[i] - self.old.tw[i])
    }
}

/// Price where `s` meets the sum of the demands that are active at that
/// price.
fn clear(s: &LinearCurve, demands: &[&LinearCurve]) -> Result<f64> {
    let mut active: Vec<&LinearCurve> = demands.iter().copied().filter(|d| d.intercept > s.intercept).collect();
    loop {
        if active.is_empty() {
            return Err(Error::Degenerate("supply and demand do not intersect at positive quantity".into()));
        }
        // Σ (p − b_d)/a_d = (p − b_s)/a_s
        let mut num = -s.intercept / s.slope;
        let mut den = -1.0 / s.slope;
        for d in &active {
            num += d.intercept / d.slope;
            den += 1.0 / d.slope;
        }
        let p = num / den;
        let before = active.len();
        active.retain(|d| d.intercept > p);
        if active.len() == before {
            return Ok(p);
        }
    }
}

/// Supply-only node 1 linked to demand node 2, with a candidate line to
/// demand node 3.
pub fn solve_three_node(s1: LinearCurve, d2: LinearCurve, d3: LinearCurve) -> Result<ThreeNodeSolution> {
    s1.check_supply("s1")?;
    d2.check_demand("d2")?;
    d3.check_demand("d3")?;
    let state = |p: f64, with3: bool| {
        let ps = [producer_surplus(&s1, p), 0.0, 0.0];
        let cs = [0.0, consumer_surplus(&d2, p), if with3 { consumer_surplus(&d3, p) } else { 0.0 }];
        let tw: [f64; 3] = std::array::from_fn(|i| cs[i] + ps[i]);
        MarketState {
            price: p,
            cs,
            ps,
            tw,
            system: tw.iter().sum(),
        }
    };
    let p_old = clear(&s1, &[&d2])?;
    let p_new = clear(&s1, &[&d2, &d3])?;
    Ok(ThreeNodeSolution {
        old: state(p_old, false),
        new: state(p_new, true),
    })
}
