from .kernel import SidecarKernel

__all__ = ["SidecarKernel"]
