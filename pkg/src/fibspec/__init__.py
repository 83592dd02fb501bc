"""Spectra, gap labels and transport bounds for the Fibonacci Hamiltonian."""
from .cantor_metrics import (Certification, GapList, ThicknessReport, box_dimension,
                             gap_lemma_certify, gaps, middle_lambda_bands, minkowski_sum,
                             thickness)
from .fibonacci_word import (ALPHA, PHI, Zeckendorf, fib, fib_word_letter, potential,
                             substitution_prefix, zeck_count, zeck_count_digits, zeckendorf)
from .ids_gaplabel import (GapRecord, dirichlet_eigencount, gap_label, gap_opening_rate, ids,
                           ids_free, label_energy_at_zero)
from .offdiag_jacobi import (cayley_hamilton_residual, jacobi_transfer, offdiag_invariant,
                             offdiag_spectrum_approx)
from .spectrum_bands import BandSet, refine_band_edge, sigma_k_bands, spectrum_approx
from .trace_map import (EscapeResult, ModelParams, TraceTriple, escape_iterate, fricke,
                        inverse_step, line_point_diagonal, line_point_offdiag, semiconjugacy,
                        step, torus_automorphism, trace_sequence)
from .transfer_transport import (BoundSet, TransferState, a_V, alpha_bound, beta_bounds,
                                 bound_set, gamma_bounds, local_norm, norm_growth_check,
                                 transfer_product, zeta)

__version__ = "0.1.0"
