"""Rate-distortion bounds for sources with side information at two or three receivers.

Submodules:

* ``prob``: alphabets, joint pmfs, channels and auxiliary systems
* ``info``: entropies and mutual informations in bits
* ``identities``: n-letter identity checks and single-letterization
* ``classifiers``: degradedness and (conditional) less-noisy tests
* ``simplex_opt``: multi-start optimization over products of simplices
* ``rd``: Wyner-Ziv and two-receiver bounds
* ``sr``: successive refinement and scalable coding regions
* ``io`` and ``cli``: problem files, CSV output, reproduction, command line
"""
from .classifiers import cln_margin, is_less_noisy, is_physically_degraded, markov_residual, stochastic_degradedness
from .errors import *  # noqa: F401,F403
from .identities import csiszar_residual, single_letterize, telescoping_residual
from .info import binary_entropy, cond_entropy, cond_mutual_info, entropy, mutual_info
from .instance import SourceInstance
from .io import emit_csv, parse_problem, reproduce
from .prob import Alphabet, AuxiliarySystem, Channel, DeterministicMap, JointPMF, attach_auxiliary, build_joint
from .rd import (converse_lower_bound, degraded_rd, hb_upper_bound, lossless_two_source_rate, rd_curve_sweep,
                 theorem3_rate, wyner_ziv_s)
from .simplex_opt import OptOptions, minimize
from .sr import (scalable_inner_eval, sr_inner_eval, sr_outer_bound, tcg_eval, theorem5_region,
                 theorem6_region)

__version__ = "0.1.0"
