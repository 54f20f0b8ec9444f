"""Josephy-Newton solver for generalized equations ``0 in F(x) + T(x)`` with
Kantorovich-type majorant certificates."""

from .errors import (CertificateInfeasible, DegeneracyError, DomainError, EigenError, GEError,
                     HypothesisViolation, NonConvergence, NotPositiveError, ProblemFormatError)
from .inner import (AffineGE, InnerSolution, enumerate_oracle, forward_backward, semismooth_newton,
                    solve_affine_ge)
from .linop import PositivityReport, banach_invert, op_norm, positivity_report, symmetric_part
from .majorant import (Certificate, MajorantSpec, ScalarTrace, check_hypotheses, error_ef,
                       eval_majorant, newton_step_nf, scalar_sequence, smallest_zero)
from .monotone import (BoxOperator, L1Subdifferential, ZeroOperator, monotonicity_probe,
                       natural_residual, project, resolvent)
from .newton import (GEProblem, OuterConfig, SolveTrace, build_certificate, newton_step, solve,
                     uniqueness_probe, verify_error_bound)
from .derivatives import check_jacobian, check_smale_bound, estimate_lipschitz
from .problems import ProblemFile, catalog_problem, load_problem, parse_problem

__version__ = "0.1.0"
