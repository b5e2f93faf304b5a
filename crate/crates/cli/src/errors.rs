//! Exit-code classification: 0 success, 1 usage, 2 data, 3 provider.

use std::fmt;

use bias_audit_core::audit::AuditError;
use bias_audit_core::cluster::ClusterError;
use bias_audit_core::continuation::ContinuationError;
use bias_audit_core::corpus::CorpusError;
use bias_audit_core::finetune::FineTuneError;
use bias_audit_core::gateway::GatewayError;
use bias_audit_core::lexicon::LexiconError;
use bias_audit_core::metrics::MetricsError;
use bias_audit_core::report::ReportError;
use bias_audit_core::templates::TemplateError;
use bias_audit_core::topics::TopicsError;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Provider(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Provider(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Provider(m) => write!(f, "provider error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> CliError {
        CliError::Data(format!("corpus: {e}"))
    }
}

impl From<GatewayError> for CliError {
    fn from(e: GatewayError) -> CliError {
        CliError::Provider(format!("gateway: {e}"))
    }
}

impl From<AuditError> for CliError {
    fn from(e: AuditError) -> CliError {
        match e {
            AuditError::Gateway(g) => g.into(),
            other => CliError::Data(format!("audit: {other}")),
        }
    }
}

impl From<ContinuationError> for CliError {
    fn from(e: ContinuationError) -> CliError {
        match e {
            ContinuationError::Gateway(g) => g.into(),
            other => CliError::Data(format!("continuation: {other}")),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> CliError {
        CliError::Data(format!("metrics: {e}"))
    }
}

impl From<LexiconError> for CliError {
    fn from(e: LexiconError) -> CliError {
        CliError::Data(format!("lexicon: {e}"))
    }
}

impl From<ClusterError> for CliError {
    fn from(e: ClusterError) -> CliError {
        CliError::Data(format!("clustering: {e}"))
    }
}

impl From<TopicsError> for CliError {
    fn from(e: TopicsError) -> CliError {
        match e {
            TopicsError::Gateway(g) => g.into(),
            other => CliError::Data(format!("topics: {other}")),
        }
    }
}

impl From<FineTuneError> for CliError {
    fn from(e: FineTuneError) -> CliError {
        match e {
            FineTuneError::Provider(g) => g.into(),
            other => CliError::Data(format!("finetune: {other}")),
        }
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> CliError {
        CliError::Data(format!("report: {e}"))
    }
}

impl From<TemplateError> for CliError {
    fn from(e: TemplateError) -> CliError {
        CliError::Data(format!("templates: {e}"))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Data(format!("io: {e}"))
    }
}
