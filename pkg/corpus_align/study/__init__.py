# Make the AlignNetStudy accessible from outside the file main
from .main import AlignNetStudy
from .alignment_curve import AlignmentCurve
__all__ = ['AlignNetStudy', 'AlignmentCurve']
