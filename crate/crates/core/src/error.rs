use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// The five allocation constraints an action must satisfy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Constraint {
    /// A user is connected to at most one base station.
    OneSitePerUser,
    /// A base station serves at most its user capacity.
    SiteUserCapacity,
    /// A resource block at a site is allocated to at most one user.
    ExclusiveResourceBlock,
    /// A user selects at most one resource block.
    OneResourceBlockPerUser,
    /// Transmit powers at a site sum to at most its maximum.
    PowerBudget,
}

impl Constraint {
    pub const ALL: [Constraint; 5] = [
        Constraint::OneSitePerUser,
        Constraint::SiteUserCapacity,
        Constraint::ExclusiveResourceBlock,
        Constraint::OneResourceBlockPerUser,
        Constraint::PowerBudget,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Constraint::OneSitePerUser => "one-base-station-per-user",
            Constraint::SiteUserCapacity => "base-station-user-capacity",
            Constraint::ExclusiveResourceBlock => "exclusive-resource-block",
            Constraint::OneResourceBlockPerUser => "one-resource-block-per-user",
            Constraint::PowerBudget => "base-station-power-budget",
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Why an allocation action was rejected.
#[derive(Clone, Debug, PartialEq)]
pub enum ConstraintViolation {
    Violated {
        constraint: Constraint,
        site: usize,
        user: Option<usize>,
    },
    UnknownUser(usize),
    UnknownSite(usize),
    ChannelOutOfRange { site: usize, channel: u32 },
    InvalidPower { user: usize, power_w: f64 },
}

impl ConstraintViolation {
    pub fn constraint(&self) -> Option<Constraint> {
        match self {
            ConstraintViolation::Violated { constraint, .. } => Some(*constraint),
            _ => None,
        }
    }
}

impl fmt::Display for ConstraintViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintViolation::Violated {
                constraint,
                site,
                user,
            } => {
                write!(f, "constraint {constraint} violated at site index {site}")?;
                if let Some(u) = user {
                    write!(f, " (user {u})")?;
                }
                Ok(())
            }
            ConstraintViolation::UnknownUser(u) => write!(f, "unknown user {u}"),
            ConstraintViolation::UnknownSite(s) => write!(f, "unknown site index {s}"),
            ConstraintViolation::ChannelOutOfRange { site, channel } => {
                write!(f, "channel {channel} out of range at site index {site}")
            }
            ConstraintViolation::InvalidPower { user, power_w } => {
                write!(f, "invalid power {power_w} W for user {user}")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// A scenario invariant does not hold; `invariant` names the first failure.
    InvalidScenario {
        invariant: &'static str,
        detail: String,
    },
    /// Requested generation counts cannot fit the extent.
    InfeasibleSpec(String),
    /// No lane path connects the two nodes.
    Unreachable { origin: u32, destination: u32 },
    UnknownNode(u32),
    /// An allocation action broke a constraint.
    Constraint(ConstraintViolation),
    /// SINR was requested for a user without an assignment.
    Unassigned { user: usize },
    InvalidConfig(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidScenario { invariant, detail } => {
                write!(f, "invalid scenario ({invariant}): {detail}")
            }
            Error::InfeasibleSpec(msg) => write!(f, "infeasible scenario spec: {msg}"),
            Error::Unreachable {
                origin,
                destination,
            } => write!(f, "node {destination} is unreachable from node {origin}"),
            Error::UnknownNode(n) => write!(f, "unknown lane node {n}"),
            Error::Constraint(v) => write!(f, "action rejected: {v}"),
            Error::Unassigned { user } => write!(f, "user {user} has no assignment"),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

impl From<ConstraintViolation> for Error {
    fn from(v: ConstraintViolation) -> Self {
        Error::Constraint(v)
    }
}
