//! Green functions of the heat kernel, the grid convolution algebra with
//! its Banach norm, Neumann-series deconvolution and radial convolution
//! estimates.

pub mod green;
pub mod grid;
pub mod neumann;
pub mod radial;

pub use green::{g_mu, g_mu_radial, green_asymptotics, green_g, green_g_radial, green_leading_coefficient, GreenValue};
pub use grid::{banach_norm, convolve, convolve_direct, convolve_with_report, GridFn};
pub use neumann::{forward_construct, g_mu_grid, heat_kernel_grid, neumann_deconvolve, synthetic_pi_coefficients, Deconvolution};
pub use radial::{fd_gauss_ratios, gauss_decay_ratios, radial_convolution, self_convolution_ratios, RadialFn, RatioReport};
