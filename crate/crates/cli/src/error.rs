use std::fmt;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    /// Missing or contradictory inputs, bad flag values.
    Usage,
    /// Config file that does not parse or fails validation.
    Config,
    /// Simulation or estimation failed.
    Compute,
    /// Reading or writing files.
    Io,
    /// `train-check` found a point outside tolerance.
    Audit,
}

impl Category {
    pub fn exit_code(self) -> u8 {
        match self {
            Category::Usage => 2,
            Category::Config => 3,
            Category::Compute => 4,
            Category::Io => 5,
            Category::Audit => 6,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Category::Usage => "usage error",
            Category::Config => "config error",
            Category::Compute => "computation error",
            Category::Io => "i/o error",
            Category::Audit => "audit failed",
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub category: Category,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn new(category: Category, msg: impl fmt::Display) -> Self {
        Self { category, error: anyhow::anyhow!("{msg}") }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {:#}", self.category.label(), self.error)
    }
}

pub type CliResult<T> = Result<T, Failure>;

pub fn usage(msg: impl fmt::Display) -> Failure {
    Failure::new(Category::Usage, msg)
}

pub fn config(msg: impl fmt::Display) -> Failure {
    Failure::new(Category::Config, msg)
}

/// Tags any error with a category.
pub trait Categorize<T> {
    fn category(self, category: Category) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> Categorize<T> for Result<T, E> {
    fn category(self, category: Category) -> CliResult<T> {
        self.map_err(|e| Failure { category, error: e.into() })
    }
}

impl From<wmpa_core::Error> for Failure {
    fn from(e: wmpa_core::Error) -> Self {
        Failure { category: Category::Compute, error: e.into() }
    }
}
