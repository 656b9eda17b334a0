//! Problem instances: channels, model parameters, validation.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::{cnorm_sqr, CMat, Cplx};

/// Scalar field of an instance. Channels and beams live in `R^N` or `C^N`;
/// `Real` data must carry exactly zero imaginary parts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    /// Real-valued channels and beams.
    Real,
    /// Complex-valued channels and beams.
    Complex,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Real => f.write_str("real"),
            Field::Complex => f.write_str("complex"),
        }
    }
}

/// A normalized channel vector h_i. Quality thresholds and noise powers are
/// assumed pre-absorbed, so every coverage constraint has unit target:
/// |h_i^H w|^2 >= 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    entries: Vec<Cplx>,
}

impl Channel {
    /// Wrap a vector of entries.
    pub fn new(entries: Vec<Cplx>) -> Self {
        Self { entries }
    }

    /// Build from real entries.
    pub fn from_real(entries: &[f64]) -> Self {
        Self { entries: entries.iter().map(|&x| Cplx::new(x, 0.0)).collect() }
    }

    /// Entries as a slice.
    pub fn entries(&self) -> &[Cplx] {
        &self.entries
    }

    /// Dimension N.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// True when the channel has no entries.
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Squared Euclidean norm.
    pub fn norm_sqr(&self) -> f64 {
        cnorm_sqr(&self.entries)
    }

    /// True when every imaginary part is exactly zero.
    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|z| z.im == 0.0)
    }
}

/// Rank-one coverage matrix H_i = h_i h_i^H, kept in factored form.
///
/// Quadratic forms go through the factor (`|h^H x|^2`), which is cheaper and
/// exactly nonnegative; [`OuterProductMatrix::materialize`] produces the
/// dense matrix when one is needed.
#[derive(Clone, Debug)]
pub struct OuterProductMatrix {
    source: Channel,
}

impl OuterProductMatrix {
    /// The originating channel.
    pub fn source(&self) -> &Channel {
        &self.source
    }

    /// trace(H) = ||h||^2.
    pub fn trace(&self) -> f64 {
        self.source.norm_sqr()
    }

    /// x^H H x = |h^H x|^2.
    pub fn quad_form(&self, x: &[Cplx]) -> f64 {
        let mut acc = Cplx::new(0.0, 0.0);
        for (h, xi) in self.source.entries().iter().zip(x.iter()) {
            acc += h.conj() * xi;
        }
        acc.norm_sqr()
    }

    /// Dense N x N Hermitian matrix h h^H.
    pub fn materialize(&self) -> CMat {
        CMat::outer(self.source.entries())
    }
}

/// Error for operations that require a nonzero channel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZeroChannel;

impl fmt::Display for ZeroChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("zero channel has no outer-product matrix")
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ZeroChannel {}

/// H_i = h_i h_i^H for a nonzero channel.
pub fn outer_product(h: &Channel) -> Result<OuterProductMatrix, ZeroChannel> {
    if h.norm_sqr() == 0.0 {
        return Err(ZeroChannel);
    }
    Ok(OuterProductMatrix { source: h.clone() })
}

/// Two-slot instance: every user goes to exactly one of two slots.
#[derive(Clone, Debug)]
pub struct InstanceP1 {
    /// Scalar field.
    pub field: Field,
    /// Channels h_1..h_M, all of length N.
    pub channels: Vec<Channel>,
}

impl InstanceP1 {
    /// Number of users M.
    pub fn m(&self) -> usize {
        self.channels.len()
    }

    /// Channel dimension N (0 for an empty instance).
    pub fn n(&self) -> usize {
        self.channels.first().map_or(0, Channel::len)
    }
}

/// Multi-slot instance: user i must be covered in at least `priorities[i]`
/// of the Q slots.
#[derive(Clone, Debug)]
pub struct InstanceP2 {
    /// Scalar field.
    pub field: Field,
    /// Channels h_1..h_M, all of length N.
    pub channels: Vec<Channel>,
    /// Slot count Q >= 1.
    pub q: usize,
    /// Per-user minimum slot counts P_i, each in 1..=Q.
    pub priorities: Vec<usize>,
}

impl InstanceP2 {
    /// Number of users M.
    pub fn m(&self) -> usize {
        self.channels.len()
    }

    /// Channel dimension N (0 for an empty instance).
    pub fn n(&self) -> usize {
        self.channels.first().map_or(0, Channel::len)
    }
}

/// Which of the two problem shapes an artifact belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    /// Two-slot grouping (every user lands in exactly one slot).
    P1,
    /// Multi-slot grouping with per-user slot quotas.
    P2,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::P1 => "p1",
            Model::P2 => "p2",
        })
    }
}

/// Either instance shape, for validation entry points.
#[derive(Clone, Copy)]
pub enum InstanceRef<'a> {
    /// Two-slot instance.
    P1(&'a InstanceP1),
    /// Multi-slot instance.
    P2(&'a InstanceP2),
}

/// Machine-readable validation code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationCode {
    /// N < 2. The analysis assumes N >= 2; smaller instances still solve.
    NTooSmall,
    /// M < 2. Same advisory status as `NTooSmall`.
    MTooSmall,
    /// Channel lengths differ within one instance.
    ChannelLengthMismatch,
    /// A channel is the zero vector; its coverage constraint is infeasible.
    ZeroChannel,
    /// Real field tag but a nonzero imaginary part present.
    FieldMismatch,
    /// Q < 1.
    QTooSmall,
    /// P_i < 1.
    PriorityTooSmall,
    /// P_i > Q.
    PriorityExceedsSlots,
}

impl ViolationCode {
    /// Stable string form used in CLI output and tests.
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::NTooSmall => "N_TOO_SMALL",
            ViolationCode::MTooSmall => "M_TOO_SMALL",
            ViolationCode::ChannelLengthMismatch => "CHANNEL_LENGTH_MISMATCH",
            ViolationCode::ZeroChannel => "ZERO_CHANNEL",
            ViolationCode::FieldMismatch => "FIELD_MISMATCH",
            ViolationCode::QTooSmall => "Q_TOO_SMALL",
            ViolationCode::PriorityTooSmall => "PRIORITY_TOO_SMALL",
            ViolationCode::PriorityExceedsSlots => "PRIORITY_EXCEEDS_SLOTS",
        }
    }

    /// Advisory violations flag departures from the analysis assumptions
    /// (N >= 2, M >= 2); the machinery still accepts such instances. All
    /// other codes are structural and make an instance unusable.
    pub fn is_advisory(self) -> bool {
        matches!(self, ViolationCode::NTooSmall | ViolationCode::MTooSmall)
    }
}

/// One validation finding.
#[derive(Clone, Debug)]
pub struct Violation {
    /// What went wrong.
    pub code: ViolationCode,
    /// Index of the offending user/channel, when applicable.
    pub index: Option<usize>,
    /// Human-readable detail.
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(i) => write!(f, "{} (index {}): {}", self.code.as_str(), i, self.message),
            None => write!(f, "{}: {}", self.code.as_str(), self.message),
        }
    }
}

fn validate_channels(field: Field, channels: &[Channel], out: &mut Vec<Violation>) {
    use alloc::format;
    let m = channels.len();
    if m < 2 {
        out.push(Violation {
            code: ViolationCode::MTooSmall,
            index: None,
            message: format!("analysis assumes M >= 2, got M = {m}"),
        });
    }
    let n = channels.first().map_or(0, Channel::len);
    if n < 2 {
        out.push(Violation {
            code: ViolationCode::NTooSmall,
            index: None,
            message: format!("analysis assumes N >= 2, got N = {n}"),
        });
    }
    for (i, h) in channels.iter().enumerate() {
        if h.len() != n {
            out.push(Violation {
                code: ViolationCode::ChannelLengthMismatch,
                index: Some(i),
                message: format!("channel length {} != {}", h.len(), n),
            });
        }
        if h.norm_sqr() == 0.0 {
            out.push(Violation {
                code: ViolationCode::ZeroChannel,
                index: Some(i),
                message: String::from("zero channel makes its constraint infeasible"),
            });
        }
        if field == Field::Real && !h.is_real() {
            out.push(Violation {
                code: ViolationCode::FieldMismatch,
                index: Some(i),
                message: String::from("real field tag but nonzero imaginary part"),
            });
        }
    }
}

/// Collect every invariant violation; an empty list means valid. Advisory
/// codes (see [`ViolationCode::is_advisory`]) do not block downstream use.
pub fn validate_instance(inst: InstanceRef<'_>) -> Vec<Violation> {
    use alloc::format;
    let mut out = Vec::new();
    match inst {
        InstanceRef::P1(p1) => validate_channels(p1.field, &p1.channels, &mut out),
        InstanceRef::P2(p2) => {
            validate_channels(p2.field, &p2.channels, &mut out);
            if p2.q < 1 {
                out.push(Violation {
                    code: ViolationCode::QTooSmall,
                    index: None,
                    message: String::from("need at least one slot"),
                });
            }
            for (i, &p) in p2.priorities.iter().enumerate() {
                if p < 1 {
                    out.push(Violation {
                        code: ViolationCode::PriorityTooSmall,
                        index: Some(i),
                        message: format!("P_{} = {} < 1", i, p),
                    });
                }
                if p > p2.q {
                    out.push(Violation {
                        code: ViolationCode::PriorityExceedsSlots,
                        index: Some(i),
                        message: format!("P_{} = {} exceeds Q = {}", i, p, p2.q),
                    });
                }
            }
            if p2.priorities.len() != p2.channels.len() {
                out.push(Violation {
                    code: ViolationCode::ChannelLengthMismatch,
                    index: None,
                    message: format!(
                        "{} priorities for {} channels",
                        p2.priorities.len(),
                        p2.channels.len()
                    ),
                });
            }
        }
    }
    out
}

/// True when the instance has no structural (non-advisory) violations.
pub fn is_structurally_sound(violations: &[Violation]) -> bool {
    violations.iter().all(|v| v.code.is_advisory())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Cplx {
        Cplx::new(re, im)
    }

    #[test]
    fn validate_accepts_well_formed_p1() {
        let inst = InstanceP1 {
            field: Field::Real,
            channels: vec![Channel::from_real(&[1.0, 0.0]), Channel::from_real(&[0.5, -1.0])],
        };
        assert!(validate_instance(InstanceRef::P1(&inst)).is_empty());
    }

    #[test]
    fn validate_flags_small_n_and_priority_overflow() {
        let inst = InstanceP1 {
            field: Field::Real,
            channels: vec![Channel::from_real(&[1.0]), Channel::from_real(&[2.0])],
        };
        let v = validate_instance(InstanceRef::P1(&inst));
        assert!(v.iter().any(|x| x.code == ViolationCode::NTooSmall));

        let p2 = InstanceP2 {
            field: Field::Real,
            channels: vec![Channel::from_real(&[1.0, 0.0]), Channel::from_real(&[0.0, 1.0])],
            q: 2,
            priorities: vec![3, 1],
        };
        let v = validate_instance(InstanceRef::P2(&p2));
        assert!(v.iter().any(|x| x.code == ViolationCode::PriorityExceedsSlots
            && x.index == Some(0)));
        assert!(!is_structurally_sound(&v));
    }

    #[test]
    fn validate_is_pure() {
        let inst = InstanceP1 {
            field: Field::Complex,
            channels: vec![
                Channel::new(vec![c(1.0, 1.0), c(0.0, 0.0)]),
                Channel::new(vec![c(0.0, 0.0), c(0.0, 0.0)]),
            ],
        };
        let a = validate_instance(InstanceRef::P1(&inst));
        let b = validate_instance(InstanceRef::P1(&inst));
        assert_eq!(a.len(), b.len());
        assert!(a.iter().any(|x| x.code == ViolationCode::ZeroChannel && x.index == Some(1)));
    }

    #[test]
    fn outer_product_examples() {
        // h = (1, 0) real.
        let h = Channel::from_real(&[1.0, 0.0]);
        let hh = outer_product(&h).unwrap().materialize();
        assert_eq!(hh.get(0, 0), c(1.0, 0.0));
        assert_eq!(hh.get(0, 1), c(0.0, 0.0));
        assert_eq!(hh.get(1, 1), c(0.0, 0.0));

        // h = (1, i) complex -> [[1, -i], [i, 1]].
        let h = Channel::new(vec![c(1.0, 0.0), c(0.0, 1.0)]);
        let hh = outer_product(&h).unwrap().materialize();
        assert_eq!(hh.get(0, 0), c(1.0, 0.0));
        assert_eq!(hh.get(0, 1), c(0.0, -1.0));
        assert_eq!(hh.get(1, 0), c(0.0, 1.0));
        assert_eq!(hh.get(1, 1), c(1.0, 0.0));

        // trace = ||h||^2.
        let h = Channel::new(vec![c(1.2, -0.4), c(0.3, 0.9), c(-1.0, 0.0)]);
        let op = outer_product(&h).unwrap();
        assert_abs_diff_eq!(op.trace(), h.norm_sqr(), epsilon = 1e-12);
        assert_abs_diff_eq!(op.materialize().trace_re(), h.norm_sqr(), epsilon = 1e-12);

        assert_eq!(outer_product(&Channel::from_real(&[0.0, 0.0])).err(), Some(ZeroChannel));
    }

    #[test]
    fn outer_product_phase_invariance() {
        let h = Channel::new(vec![c(0.8, -0.1), c(0.2, 0.7)]);
        let theta = 1.234f64;
        let u = c(theta.cos(), theta.sin());
        let hp = Channel::new(h.entries().iter().map(|z| z * u).collect());
        let a = outer_product(&h).unwrap().materialize();
        let b = outer_product(&hp).unwrap().materialize();
        for i in 0..2 {
            for j in 0..2 {
                assert!((a.get(i, j) - b.get(i, j)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn outer_product_is_rank_one_psd() {
        let h = Channel::new(vec![c(1.0, 0.5), c(-0.3, 0.2), c(0.0, -1.1)]);
        let hh = outer_product(&h).unwrap().materialize();
        assert!(hh.hermitian_defect() < 1e-12);
        let (vals, _) = hh.herm_eigen();
        assert!(vals.iter().all(|&l| l >= -1e-12));
        let big = vals.iter().filter(|&&l| l > 1e-9 * h.norm_sqr()).count();
        assert_eq!(big, 1);
    }
}
