import os
import subprocess

__dir__ = os.path.dirname(__file__)

def get_version_from_pkg():
    try:
        from importlib.metadata import version, PackageNotFoundError
    except ImportError:
        return None

    try:
        return version("icm")
    except PackageNotFoundError:
        return None

def get_version_from_git():
    # Only meaningful in a source checkout; installed copies have metadata.
    try:
        output = subprocess.check_output(['git', 'describe', '--tags', '--always'],
                                         stderr=subprocess.DEVNULL,
                                         cwd=__dir__)
    except (subprocess.CalledProcessError, FileNotFoundError, OSError):
        return None
    return output.decode('ascii').strip() or None

def get_version():
    return get_version_from_pkg() or get_version_from_git() or '0.0.0+unknown'
