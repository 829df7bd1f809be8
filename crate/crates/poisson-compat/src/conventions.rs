//! The sign and normalization ledger.
//!
//! Every formula in this crate refers to the table below; nothing else in
//! the codebase is allowed to introduce its own sign choice. Coordinate
//! indices are written `1..n` in the table but are `0`-based in code.
//!
//! | object | convention |
//! |---|---|
//! | Poisson bracket | `{f,g} = pi^{ij} d_i f d_j g` |
//! | sharp (anchor) | `(#a)^i = pi^{ji} a_j`, so `{f,g} = (#df)(g)` |
//! | Koszul bracket | `[a,b]_pi = L_{#a} b - L_{#b} a - d(pi(a,b))`; on exact forms `[df,dg]_pi = d{f,g}` |
//! | wedge | unit shuffle coefficients: `(dx ^ dy)_{12} = +1` |
//! | exterior derivative | `(d s)_{i0..ip} = sum_a (-1)^a d_{i_a} s_{i0.._..ip}`, no `1/(p+1)!` |
//! | interior product | vector into first slot, `(X _| s)_K = X^j s_{jK}`; multivectors nest as `(X ^ Y) _| s = Y _| (X _| s)`, i.e. `(M _| s)_K = sum_{J incr} M^J s_{JK}` |
//! | codifferential | `delta s = pi _| d s - d(pi _| s)` |
//! | contravariant divergence | `(D.s)_K = (D_{dx^j} s)_{jK}` (trace over the first form slot) |
//! | modular vector field | `phi^i = D.(dx^i)` |
//! | contravariant Koszul formula | `2<D_a b, c> = #a<b,c> + #b<a,c> - #c<a,b> + <[a,b],c> - <[b,c],a> + <[c,a],b>` on co-frames |
//! | symplectic inverse | `omega` is the matrix inverse of `pi^{ij}` (`omega_{ik} pi^{kj} = delta_i^j`) |
//! | metacurvature sign | pinned so both metacurvature pipelines agree: on `g = h^-2 delta`, `pi^{12} = h`, the only independent component is `M^{222}_{12} = + h d^3h/dx^3` |
//! | jets | raw partial derivatives (no factorials), dense over the degree simplex, lexicographic multi-index order |
//! | scale-free residual | `max-abs(residual) / max(1, max-abs(inputs))` |
//!
//! Two consequences worth spelling out, since they pin the signs that the
//! source material leaves implicit:
//!
//! * With this nesting rule, on the conformal chart `g = h^-2 delta`,
//!   `pi = h d_x ^ d_y`, `eps = h^-2 dx ^ dy` the contraction evaluates to
//!   `pi _| eps = +h^-1`. The opposite overall sign would require breaking
//!   the divergence identity `D.s = phi _| s - delta s`, which this crate
//!   enforces numerically at every run.
//! * The torsion-free and metric-compatibility residuals are mandatory
//!   postconditions of the connection builder, so a sign error anywhere in
//!   the Koszul formula is a build-time failure, not a silent bias.
