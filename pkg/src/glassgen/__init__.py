"""glassgen: physically-based synthetic dataset generator for single-image
reflection removal.

Renders the five-layer decomposition (I, T, B, R, MR) of glass-slab scenes
over HDR/LDR imagery, applies a camera post-processing chain, and packages
composite training pairs with a fixed caption. An analytic slab-optics
oracle validates the renderer.
"""

from .dataset import (PROMPT, SampledParameters, SamplerConfig,
                      generate_dataset, generate_sample, sample_parameters,
                      verify_oracle)
from .imagecore import LdrImage, RadianceImage, load_hdr, load_ldr
from .optics import (GlassSpec, SlabResponse, double_slab_response_analytic,
                     slab_response_analytic)
from .renderer import (RenderMode, RenderOutput, RenderSettings, render,
                       render_quintuple)
from .scene import AssetRegistry, SceneConfig, SceneSetup, make_scene

__version__ = "0.1.0"

__all__ = [
    "PROMPT", "SampledParameters", "SamplerConfig", "generate_dataset",
    "generate_sample", "sample_parameters", "verify_oracle",
    "LdrImage", "RadianceImage", "load_hdr", "load_ldr",
    "GlassSpec", "SlabResponse", "slab_response_analytic",
    "double_slab_response_analytic",
    "RenderMode", "RenderOutput", "RenderSettings", "render",
    "render_quintuple",
    "AssetRegistry", "SceneConfig", "SceneSetup", "make_scene",
    "__version__",
]
