from .scan import ClassifyReport, Fit, ScanPoint, ScanResult, classify, ordering_certificates, run_fig1, scan
from .verify import VerifyReport, verify_suite

__all__ = [
    "ClassifyReport",
    "Fit",
    "ScanPoint",
    "ScanResult",
    "VerifyReport",
    "classify",
    "ordering_certificates",
    "run_fig1",
    "scan",
    "verify_suite",
]
