"""Exact-arithmetic constructions of increasing maps that restrict to
bijections of the rationals in [0,1], with replayable certificates."""

from .avoid import AvoidFamily, default_family, lft_eval, lft_first, lft_second
from .basic import (ConstructionState, f_exact_at, init_basic, run_basic,
                    step_even, step_odd)
from .errors import (AvoidanceExhausted, BadEnumeration, BracketTooWide,
                     DuplicateNode, EmptyTildeQ, HeightTooLarge, NotBracketed,
                     NotMonotone, ParseError, PoleInUnit, QbijectError,
                     ReplayDivergence, ScheduleOverflow, StageInfeasible,
                     StageTooShallow)
from .heights import (HeightLedger, HeightSchedule, check_height_ledger,
                      run_heights)
from .pila import (PilaState, SlowFunction, choose_T, count_Cf,
                   count_Cf_at_least, pila_step, poly_height_coeff, run_pila)
from .poly import (Poly, RatFunc, eval_enclosure, monotone_invert,
                   node_product, sup_abs_bound_unit, tail_bound,
                   unit_increasing_lower_bound)
from .ratcore import (Rat, Verdict, bounded_rational_near, certify_h_le,
                      farey_count, height_H, lex_cmp, lex_enumerate,
                      lex_index, LexCursor, parse_rat, rat_str,
                      simplest_in_interval)
from .trace import StepRecord, Trace
from .verify import (VerifyReport, asymptotic_suite, lft_bijection_check,
                     verify_trace)

__version__ = "0.1.0"
