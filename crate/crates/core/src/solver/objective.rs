//! Player `i`'s payoff as a function of its own log-allocations, with the
//! opponents' allocations held fixed. This is the hot path of the solver, so
//! opponent aggregates are computed once per best response.

use crate::error::Result;
use crate::model::{
    performance, safety, PlayerParams, RiskMode, StrategyProfile, LN_VALUE_MAX, LN_VALUE_MIN,
};

#[derive(Debug, Clone)]
pub(crate) struct ResponseObjective {
    own: PlayerParams,
    mode: RiskMode,
    /// ln of the opponents' summed performance.
    ln_p_opp: f64,
    /// Multiplicative mode: sum of the opponents' ln(s/(1+s)).
    ln_sigma_opp: f64,
    /// Winner-only mode: opponents' performance-weighted safe probability
    /// and its complement.
    w_opp: f64,
    w_opp_c: f64,
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl ResponseObjective {
    /// `world` is the parameter vector player `i` believes in.
    pub(crate) fn new(
        i: usize,
        profile: &StrategyProfile,
        world: &[PlayerParams],
        mode: RiskMode,
    ) -> Result<Self> {
        let mut p_sum = 0.0;
        let mut ln_sigma_opp = 0.0;
        let mut w = 0.0;
        let mut w_c = 0.0;
        for (j, params) in world.iter().enumerate() {
            if j == i {
                continue;
            }
            let p = performance(params, profile.xp[j]);
            let s = safety(params, profile.xs[j], p)?;
            p_sum += p;
            ln_sigma_opp += if s == 0.0 {
                f64::NEG_INFINITY
            } else {
                -(1.0 / s).ln_1p()
            };
            w += p * s / (1.0 + s);
            w_c += p / (1.0 + s);
        }
        let (w_opp, w_opp_c) = if p_sum > 0.0 {
            (w / p_sum, w_c / p_sum)
        } else {
            (0.0, 1.0)
        };
        Ok(Self {
            own: world[i],
            mode,
            ln_p_opp: p_sum.ln(),
            ln_sigma_opp,
            w_opp,
            w_opp_c,
        })
    }

    /// Payoff at `z = (ln xs, ln xp)`.
    pub(crate) fn value(&self, z: [f64; 2]) -> f64 {
        self.eval(z, false).0
    }

    /// Payoff and its gradient with respect to `(ln xs, ln xp)`.
    pub(crate) fn value_grad(&self, z: [f64; 2]) -> (f64, [f64; 2]) {
        self.eval(z, true)
    }

    fn eval(&self, z: [f64; 2], want_grad: bool) -> (f64, [f64; 2]) {
        let pp = &self.own;
        let ln_p = (pp.b.ln() + pp.beta * z[1]).clamp(LN_VALUE_MIN, LN_VALUE_MAX);
        let ln_s =
            (pp.a.ln() + pp.alpha * z[0] - pp.theta * ln_p).clamp(LN_VALUE_MIN, LN_VALUE_MAX);
        let xs = z[0].exp();
        let xp = z[1].exp();
        let q = logistic(ln_p - self.ln_p_opp);
        let q_c = logistic(self.ln_p_opp - ln_p);
        let pi = logistic(ln_s);
        let pi_c = logistic(-ln_s);
        let cost = pp.r * (xs + xp);

        // l_s and l_p: partials of the gross payoff in ln s and ln p.
        let (u, l_s, l_p) = match self.mode {
            RiskMode::Multiplicative => {
                let ln_sigma = -(-ln_s).exp().ln_1p() + self.ln_sigma_opp;
                let sigma = ln_sigma.exp();
                let sigma_c = -ln_sigma.exp_m1();
                let u = sigma * q - sigma_c * pp.d - cost;
                (u, (q + pp.d) * sigma * pi_c, sigma * q * q_c)
            }
            RiskMode::WinnerOnly => {
                let sigma_c = q * pi_c + q_c * self.w_opp_c;
                let u = pi * q - sigma_c * pp.d - cost;
                let l_s = (1.0 + pp.d) * q * pi * pi_c;
                let l_p = q * q_c * (pi + pp.d * (pi - self.w_opp));
                (u, l_s, l_p)
            }
        };
        if !want_grad {
            return (u, [0.0; 2]);
        }
        let g0 = pp.alpha * l_s - pp.r * xs;
        let g1 = pp.beta * l_p - pp.theta * pp.beta * l_s - pp.r * xp;
        (u, [g0, g1])
    }
}
