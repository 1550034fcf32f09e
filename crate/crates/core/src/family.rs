//! Generators for the size-exploding families and the renaming-chain
//! stress family.
//!
//! ```text
//! t₀ = y        t_{n+1} = (λx. x x) tₙ
//! s₀ = y        s_{n+1} = sₙ sₙ
//! u₁ = λx.λy. y x x      u_{n+1} = λx. uₙ (λy. y x x)
//! r₀ = I = λz.z          r_{n+1} = λy. y rₙ rₙ
//! ```
//!
//! `tₙ` reaches `sₙ` in n rightmost-innermost steps and `uₙ I` reaches `rₙ`
//! in n weak head steps, while `sₙ` and `rₙ` have size exponential in n.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::term::{Term, VarId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FamilyKind {
    T,
    S,
    U,
    R,
    /// `uₙ I`.
    UI,
    Chain,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 6] = [
        FamilyKind::T,
        FamilyKind::S,
        FamilyKind::U,
        FamilyKind::R,
        FamilyKind::UI,
        FamilyKind::Chain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::T => "t",
            FamilyKind::S => "s",
            FamilyKind::U => "u",
            FamilyKind::R => "r",
            FamilyKind::UI => "ui",
            FamilyKind::Chain => "chain",
        }
    }

    fn min_n(self) -> u32 {
        match self {
            FamilyKind::U | FamilyKind::UI | FamilyKind::Chain => 1,
            _ => 0,
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyKind {
    type Err = FamilyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FamilyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| FamilyError::UnknownFamily(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FamilyError {
    #[error("{kind}({n}) has {size} symbols, above the materialisation cap of {cap}")]
    Explosion {
        kind: FamilyKind,
        n: u32,
        size: u128,
        cap: usize,
    },
    #[error("{kind} is defined for n >= {min}, got {n}")]
    OutOfRange { kind: FamilyKind, n: u32, min: u32 },
    #[error("unknown family {0:?} (expected one of t, s, u, r, ui, chain)")]
    UnknownFamily(String),
}

/// Default cap on materialised family members, in symbols.
pub const DEFAULT_SIZE_CAP: usize = 1 << 20;

/// Materialisation cap: `LAM_SIZE_CAP` if set and valid, else
/// [`DEFAULT_SIZE_CAP`].
pub fn size_cap() -> usize {
    std::env::var("LAM_SIZE_CAP")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_SIZE_CAP)
}

/// Closed-form size of a family member.
pub fn analytic_size(kind: FamilyKind, n: u32) -> u128 {
    let n = u128::from(n);
    let pow2 = |k: u128| 1u128.checked_shl(k as u32).unwrap_or(u128::MAX);
    match kind {
        FamilyKind::T => 5 * n + 1,
        FamilyKind::S => pow2(n + 1).saturating_sub(1),
        FamilyKind::U => (8 * n).saturating_sub(1),
        FamilyKind::R => pow2(n).saturating_mul(6).saturating_sub(4),
        FamilyKind::UI => 8 * n + 2,
        FamilyKind::Chain => 5 * n + 2,
    }
}

fn v(name: &str) -> Term {
    Term::var(VarId::named(name))
}

fn lam(name: &str, body: Term) -> Term {
    Term::lam(VarId::named(name), body)
}

/// `I = λz.z`.
pub fn identity() -> Term {
    lam("z", v("z"))
}

fn check(kind: FamilyKind, n: u32, cap: usize) -> Result<(), FamilyError> {
    if n < kind.min_n() {
        return Err(FamilyError::OutOfRange {
            kind,
            n,
            min: kind.min_n(),
        });
    }
    let size = analytic_size(kind, n);
    if size > cap as u128 {
        return Err(FamilyError::Explosion { kind, n, size, cap });
    }
    Ok(())
}

pub fn gen_family(kind: FamilyKind, n: u32) -> Result<Term, FamilyError> {
    gen_family_capped(kind, n, size_cap())
}

pub fn gen_family_capped(kind: FamilyKind, n: u32, cap: usize) -> Result<Term, FamilyError> {
    check(kind, n, cap)?;
    Ok(match kind {
        FamilyKind::T => {
            let delta = lam("x", Term::app(v("x"), v("x")));
            (0..n).fold(v("y"), |t, _| Term::app(delta.clone(), t))
        }
        FamilyKind::S => (0..n).fold(v("y"), |s, _| Term::app(s.clone(), s)),
        FamilyKind::U => {
            let yxx = lam("y", Term::apps(v("y"), [v("x"), v("x")]));
            (1..n).fold(lam("x", yxx.clone()), |u, _| {
                lam("x", Term::app(u, yxx.clone()))
            })
        }
        FamilyKind::R => (0..n).fold(identity(), |r, _| {
            lam("y", Term::apps(v("y"), [r.clone(), r]))
        }),
        FamilyKind::UI => Term::app(gen_family_capped(FamilyKind::U, n, cap)?, identity()),
        FamilyKind::Chain => gen_chain(n)?,
    })
}

/// The expected normal form: `sₙ` for `tₙ`, `rₙ` for `uₙ I`, `I` for the
/// chain; other members are already normal and are returned unchanged.
pub fn gen_expected(kind: FamilyKind, n: u32) -> Result<Term, FamilyError> {
    gen_expected_capped(kind, n, size_cap())
}

pub fn gen_expected_capped(kind: FamilyKind, n: u32, cap: usize) -> Result<Term, FamilyError> {
    match kind {
        FamilyKind::T => gen_family_capped(FamilyKind::S, n, cap),
        FamilyKind::UI => {
            check(kind, n, cap)?;
            gen_family_capped(FamilyKind::R, n, cap)
        }
        FamilyKind::Chain => {
            check(kind, n, cap)?;
            Ok(identity())
        }
        other => gen_family_capped(other, n, cap),
    }
}

/// Size of [`gen_expected`] without building it.
pub fn expected_size(kind: FamilyKind, n: u32) -> u128 {
    match kind {
        FamilyKind::T => analytic_size(FamilyKind::S, n),
        FamilyKind::UI => analytic_size(FamilyKind::R, n),
        FamilyKind::Chain => 2,
        other => analytic_size(other, n),
    }
}

/// `(λx₁. (λx₂. … (λxₙ. xₙ xₙ ⋯ xₙ) xₙ₋₁ …) x₁) I`, the innermost body
/// being `xₙ` applied to n further copies of itself.
///
/// Every β-step but the first binds a variable to a variable, so a machine
/// that stores such renamings in its environment must walk ever longer
/// chains of them.
pub fn gen_chain(n: u32) -> Result<Term, FamilyError> {
    if n < 1 {
        return Err(FamilyError::OutOfRange {
            kind: FamilyKind::Chain,
            n,
            min: 1,
        });
    }
    let x = |i: u32| format!("x{i}");
    let xn = x(n);
    let mut t = lam(&xn, Term::apps(v(&xn), (0..n).map(|_| v(&xn))));
    for i in (1..n).rev() {
        t = lam(&x(i), Term::app(t, v(&x(i))));
    }
    Ok(Term::app(t, identity()))
}
