import logging
import math
from typing import Sequence

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
from matplotlib.collections import PatchCollection
from matplotlib.patches import Circle, Rectangle

from farfield_estimator import EstimateResult, coherence_from_rates, gamma_x_ratio_ideal
from metasurface import MetasurfaceLayout

logger = logging.getLogger(__name__)

# no date or creator stamp in the SVG
SVG_METADATA = {'Date': None, 'Creator': None}
SVG_RC = {'svg.hashsalt': 'aqv', 'svg.fonttype': 'none'}


def render_layout_svg(layout: MetasurfaceLayout, file_path: str) -> str:
    """Top view of the rods, coloured by encoded phase, with supercell boundaries"""
    with plt.rc_context(SVG_RC):
        fig, ax = plt.subplots(figsize=(8, 8))
        patches = []
        phases = []
        for element in layout.elements:
            # rectangle anchored on its centre, rotated about it
            x, y = element.center
            angle = element.rotation
            cx = x - 0.5 * (element.lx * math.cos(angle) - element.ly * math.sin(angle))
            cy = y - 0.5 * (element.lx * math.sin(angle) + element.ly * math.cos(angle))
            patches.append(Rectangle((cx, cy), element.lx, element.ly, angle=math.degrees(angle)))
            phases.append(element.encoded_phase)

        collection = PatchCollection(patches, cmap='twilight', linewidths=0)
        collection.set_array(phases)
        collection.set_clim(0.0, 2.0 * math.pi)
        ax.add_collection(collection)

        for record in layout.supercells:
            ax.add_patch(Circle((0.0, 0.0), record.r_end, fill=False, linewidth=0.4,
                                linestyle='--', edgecolor='0.4'))

        limit = layout.spec.aperture_radius
        ax.set_xlim(-limit, limit)
        ax.set_ylim(-limit, limit)
        ax.set_aspect('equal')
        ax.set_xlabel('x (nm)')
        ax.set_ylabel('y (nm)')
        ax.set_title(f"{layout.spec.design_kind.value} metasurface, {len(layout.elements)} rods")
        fig.colorbar(collection, ax=ax, label='encoded phase (rad)')

        fig.savefig(file_path, format='svg', metadata=SVG_METADATA)
        plt.close(fig)

    logger.info(f"Rendered layout to {file_path}")
    return file_path


def render_sweep_svg(results: Sequence[EstimateResult], file_path: str) -> str:
    """Decay-rate ratio and |rho12| against numerical aperture, metasurface and ideal mirror"""
    na = [r.na for r in results]
    ideal = [gamma_x_ratio_ideal(value) for value in na]

    with plt.rc_context(SVG_RC):
        fig, (ax_rate, ax_coherence) = plt.subplots(1, 2, figsize=(10, 4))

        ax_rate.plot(na, [r.gamma_x_ratio for r in results], color='tab:blue', label='metasurface')
        ax_rate.plot(na, ideal, color='tab:blue', linestyle='--', label='ideal mirror')
        ax_rate.set_xlabel('NA')
        ax_rate.set_ylabel('gamma_x / gamma_0')
        ax_rate.set_ylim(0.0, 1.05)
        ax_rate.legend()

        ax_coherence.plot(na, [r.coherence_abs for r in results], color='tab:red', label='metasurface')
        ax_coherence.plot(na, [abs(coherence_from_rates(g, 1.0)) for g in ideal], color='tab:red',
                          linestyle='--', label='ideal mirror')
        ax_coherence.set_xlabel('NA')
        ax_coherence.set_ylabel('|rho_12|')
        ax_coherence.set_ylim(0.0, 0.55)
        ax_coherence.legend()

        fig.tight_layout()
        fig.savefig(file_path, format='svg', metadata=SVG_METADATA)
        plt.close(fig)

    logger.info(f"Rendered NA sweep to {file_path}")
    return file_path
