use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RncError {
    #[error("moduli list is empty")]
    EmptyModuli,
    #[error("moduli {0} and {1} are not coprime")]
    NotCoprime(u64, u64),
    #[error("modulus {0} is smaller than 2")]
    ModulusTooSmall(u64),
    #[error("modulus {0} does not fit in 32 bits")]
    ModulusTooLarge(u64),
    #[error("moduli must be strictly increasing ({0} precedes {1})")]
    Unordered(u64, u64),
    #[error("dynamic range does not fit in 64 bits")]
    RangeTooLarge,
    #[error("value {value} outside the representable range [{low}, {high})")]
    OutOfRange { value: i128, low: i128, high: i128 },
    #[error("encoded operand is not below {high}")]
    EncodedOutOfRange { high: u128 },
    #[error("operand is bound to a different moduli set")]
    ModuliMismatch,
    #[error("expected {expected} residue components, got {got}")]
    ComponentCount { expected: usize, got: usize },
    #[error("encoded result wrapped past the dynamic range")]
    Overflow,
    #[error("encoded subtraction underflowed")]
    Underflow,
    #[error("division by an encoded zero")]
    DivisionByZero,
    #[error("residue {residue} has no inverse modulo {modulus}")]
    NoModularInverse { residue: u64, modulus: u64 },
    #[error("expected {expected} bytes, got {got}")]
    BadLength { expected: usize, got: usize },
    #[error("trace segment {next} cannot follow segment {current}")]
    SegmentOrder { current: u8, next: u8 },
    #[error("cross-key filtering needs reports for at least two distinct keys")]
    NeedTwoKeys,
}

pub type Result<T, E = RncError> = std::result::Result<T, E>;
