"""polyfreq: Dirichlet eigenvalues of polygons and partial Steiner symmetrization.

Submodules
----------
geometry           polygon primitives, barycentric coordinates, deficits, asymmetry
manifold           constraint Jacobians at the regular polygon and sampling near it
symmetrize         the symmetrization step and flow
fem                P1 finite elements for the first Dirichlet eigenpair
shape_derivatives  eigenvalue derivatives along a symmetrization step
spectra_formulas   closed-form eigenvalues and the flow series
stability          triangle deficits and the thin-triangle family
bubble             equilibrium scale of a polygonal bubble
kernels            compiled/pure-Python hot loops (``kernels.BACKEND``)
"""

__version__ = "0.1.0"

from .geometry import (ManifoldPoint, Polygon, deficit_and_variances, fraenkel_asymmetry,
                       regular_polygon, symmetric_difference_area, to_manifold, to_polygon,
                       validate_manifold)
from .kernels import BACKEND

__all__ = [
    "BACKEND", "ManifoldPoint", "Polygon", "deficit_and_variances", "fraenkel_asymmetry",
    "regular_polygon", "symmetric_difference_area", "to_manifold", "to_polygon",
    "validate_manifold", "__version__",
]
