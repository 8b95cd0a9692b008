#!/usr/bin/env python3
"""
PolarMap v1.0 - Setup Script
Environment check, dependency installation, sample config and a smoke test
"""

import subprocess
import sys
from pathlib import Path

SAMPLE_CONFIG = """# PolarMap sample configuration (flag names as keys)
shape=star:2,0.4,3
nodes=3072
k=0
truncation=1,2,3,4,5,6
modes=64
out=output
format=json,csv,svg
"""


def run_command(command, description):
    """Run a shell command with error handling"""
    print(f"📦 {description}...")
    try:
        subprocess.run(command, shell=True, check=True, capture_output=True, text=True)
        print(f"✅ {description} completed successfully")
        return True
    except subprocess.CalledProcessError as e:
        print(f"❌ {description} failed: {e.stderr}")
        return False


def check_python_version():
    """Check if Python version is compatible"""
    print("🐍 Checking Python version...")
    version = sys.version_info
    if version.major >= 3 and version.minor >= 9:
        print(f"✅ Python {version.major}.{version.minor}.{version.micro} is compatible")
        return True
    print(f"❌ Python {version.major}.{version.minor} is not compatible. Need Python 3.9+")
    return False


def install_dependencies(dev=False):
    """Install the pinned requirements"""
    requirements = "requirements-dev.txt" if dev else "requirements.txt"
    return run_command(f"{sys.executable} -m pip install -r {requirements}", f"Installing {requirements}")


def setup_directories():
    """Create the default output directory"""
    print("📁 Setting up directory structure...")
    Path("output").mkdir(parents=True, exist_ok=True)
    print("✅ Created output")


def test_imports():
    """Test if the numerical stack can be imported"""
    print("🧪 Testing module imports...")

    test_imports = [
        ("numpy", "NumPy"),
        ("scipy.linalg", "SciPy linear algebra"),
        ("scipy.spatial", "SciPy spatial"),
        ("pandas", "Pandas"),
        ("dotenv", "python-dotenv"),
        ("svgpathtools", "svgpathtools"),
    ]

    failed_imports = []
    for module, name in test_imports:
        try:
            __import__(module)
            print(f"✅ {name} imported successfully")
        except ImportError:
            print(f"❌ {name} import failed")
            failed_imports.append(name)

    if failed_imports:
        print(f"\n⚠️  Some imports failed: {', '.join(failed_imports)}")
    else:
        print("🎉 All core imports successful!")
    return len(failed_imports) == 0


def create_sample_config():
    """Create a sample key=value configuration file"""
    print("⚙️ Creating sample configuration...")
    Path("polarmap.conf").write_text(SAMPLE_CONFIG, encoding="utf-8")
    print("✅ Configuration file created: polarmap.conf")


def run_basic_test():
    """Unit-disk GPTs: gamma^2_11 must be -1"""
    print("🧪 Running basic functionality test...")
    try:
        from modules.geometry import make_shape, parse_shape, sample
        from modules.gpt import compute_gpt, gamma_tables

        sb = sample(make_shape(parse_shape("disk:1")), 256)
        gamma = gamma_tables(compute_gpt(sb, 0.0, 4))
        value = gamma.g2(1, 1).real
        if abs(value + 1.0) > 1e-8:
            print(f"❌ Unit disk gamma^2_11 = {value}, expected -1")
            return False
        print(f"✅ Unit disk gamma^2_11 = {value:.12f}")
        print("🎉 Basic functionality test completed successfully!")
        return True
    except Exception as e:
        print(f"❌ Basic test failed: {e}")
        return False


def main(skip_deps=False):
    """Main setup function"""
    print("🗺️  PolarMap v1.0 Setup")
    print("=" * 50)

    if not check_python_version():
        print("Please upgrade Python to 3.9+ and try again")
        return False

    setup_directories()
    if not skip_deps:
        install_dependencies()
    imports_ok = test_imports()
    create_sample_config()

    if imports_ok and run_basic_test():
        print("\n🎉 PolarMap v1.0 setup completed successfully!")
        print("\nNext steps:")
        print("1. Run: python run.py map --config polarmap.conf")
        print("2. Or validate a shape: python run.py validate --shape ellipse:2,1")
        print("3. Or run tests: pytest tests/")
        return True

    print("\n⚠️  Setup completed with some issues")
    return False


if __name__ == "__main__":
    import argparse

    parser = argparse.ArgumentParser(description="PolarMap v1.0 Setup")
    parser.add_argument("--skip-deps", action="store_true", help="Skip dependency installation")
    parser.add_argument("--test-only", action="store_true", help="Only run tests")
    args = parser.parse_args()

    if args.test_only:
        print("🧪 Running tests only...")
        test_imports()
        ok = run_basic_test()
    else:
        ok = main(skip_deps=args.skip_deps)
    sys.exit(0 if ok else 1)
