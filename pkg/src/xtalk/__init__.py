"""Crosstalk delay toolkit for capacitively coupled on-chip buses.

Classify bus transitions, estimate wire delays with closed-form modal models,
simulate the distributed RC network, search for worst-case patterns and build
crosstalk-avoidance codebooks.
"""

from .analytic import (ModalExpansion, bus_delay, bus_delay_profile, crossing_time, eigenmodes,
                       five_wire_waveform, table_delay, three_wire_waveform)
from .bus import (FALL, RISE, STEADY, BusSpec, CrosstalkClass, DelayEstimate, TransitionPattern,
                  baseline_class_delay, baseline_delay, classify_bus, classify_wire)
from .cac import Codebook, codebook_worst_delays, fpc_set, generate_codebook, pair_class
from .errors import XtalkError
from .search import SearchReport, alg1, exhaustive
from .simulator import build_network, simulate, step_responses, worst_delay_sim

__version__ = "0.1.0"
