import os
import sys

# ctest points NMFLUX_PACKAGE_DIR at the build tree; an editable install would
# otherwise shadow it through its meta-path redirect
_pkg_dir = os.environ.get("NMFLUX_PACKAGE_DIR")
if _pkg_dir:
    sys.meta_path[:] = [f for f in sys.meta_path if type(f).__name__ != "ScikitBuildRedirectingFinder"]
    sys.path.insert(0, _pkg_dir)
    import nmflux

    assert os.path.dirname(os.path.dirname(nmflux.__file__)) == os.path.abspath(_pkg_dir), nmflux.__file__
