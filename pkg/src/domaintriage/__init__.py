"""Detection toolkit for themed malicious domain names.

The pipeline: ingest labeled feeds, enrich with WHOIS, extract 17
lexical/WHOIS/TLD/registrar features, drop correlated features, train a
small ensemble of classifiers, and score new domains by majority vote.
"""

from domaintriage.model import (
    Domain,
    DomainTriageError,
    DatasetRow,
    FeatureVector,
    LabeledDataset,
    WhoisRecord,
    parse_domain,
)

__version__ = "0.1.0"

__all__ = [
    "Domain",
    "DomainTriageError",
    "DatasetRow",
    "FeatureVector",
    "LabeledDataset",
    "WhoisRecord",
    "parse_domain",
    "__version__",
]
