use gamma_bsde_core::bsde::Generator;
use gamma_bsde_core::lattice::Lattice;
use gamma_bsde_core::scheme::{NodeCtx, ZMatrix};
use gamma_bsde_core::{Error, Point, Result, Vec2};

use crate::expr::{Env, Expr};

/// Generator given by an expression of `t`, `y`, `z` and `w`.
#[derive(Debug, Clone)]
pub struct ExprGenerator {
    expr: Expr,
    lipschitz_y: f64,
    lipschitz_z: f64,
    bound_at_zero: f64,
}

impl ExprGenerator {
    pub fn new(expr: Expr, lipschitz_y: f64, lipschitz_z: f64) -> Self {
        ExprGenerator { expr, lipschitz_y, lipschitz_z, bound_at_zero: 0.0 }
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    /// Records `sup |f(node, 0, 0)|` over the lattice nodes.
    pub fn measure_bound(&mut self, l: &Lattice) -> Result<f64> {
        let mut b: f64 = 0.0;
        for i in 0..l.n_steps() {
            for id in l.nodes(i) {
                let ctx = NodeCtx::new(l, id);
                b = b.max(self.eval(&ctx, Point::ZERO, &[[0.0; 2]; 2])?.norm());
            }
        }
        self.bound_at_zero = b;
        Ok(b)
    }
}

impl Generator for ExprGenerator {
    fn eval(&self, ctx: &NodeCtx, y: Point, z: &ZMatrix) -> Result<Vec2> {
        let env = Env { y: [y.x, y.y], z: *z, ..Env::at(ctx) };
        self.expr.eval(&env).map_err(|e| Error::Eval(e.0))
    }

    fn lipschitz_y(&self) -> f64 {
        self.lipschitz_y
    }

    fn lipschitz_z(&self) -> f64 {
        self.lipschitz_z
    }

    fn bound_at_zero(&self) -> f64 {
        self.bound_at_zero
    }
}
