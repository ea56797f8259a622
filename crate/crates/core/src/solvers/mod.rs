//! Regularized least-`L_q` estimators over l1-balls and the closed-form
//! residual and regularizer builders used to evaluate oracle inequalities.

mod bounds;
mod rerm;

pub use bounds::{
    alpha_n, canonical_kappa, generalized_inverse, generalized_inverse_fn, massart_rate, rerm_regularizer,
    rho_n_theorem_a, rho_n_theorem_b, theorem_c_penalty, ResidualSpec,
};
pub use rerm::{project_l1_ball, solve_lasso, solve_lq_rerm, solve_square_lasso, RermSolution};
