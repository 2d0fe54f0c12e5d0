#-------------------------------------------------------------------------------
# Licensed under the 3-Clause BSD License, see the LICENSE file for details.
#-------------------------------------------------------------------------------

from setuptools import setup
from cellfade import __version__

#-------------------------------------------------------------------------------
# Package description
#-------------------------------------------------------------------------------
with open('README.rst') as readme:
    long_description = readme.read()

#-------------------------------------------------------------------------------
# Setup
#-------------------------------------------------------------------------------
setup(
    name = 'cellfade',
    version = __version__,
    description = 'Calibration and simulation of lithium-ion capacity fade',
    long_description = long_description,
    license = 'BSD License',
    packages = ['cellfade', 'cellfade.cli'],
    include_package_data = True,
    package_data={
        '': ['*.conf'],
        'cellfade': ['data/*.conf', 'data/*.csv'],
    },
    entry_points={
        'console_scripts': ['cellfade = cellfade.cli.main:main']
    },
    classifiers = [
        'Development Status :: 4 - Beta',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: BSD License',
        'Operating System :: OS Independent',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.7',
        'Topic :: Scientific/Engineering',
        'Environment :: Console',
    ],
    python_requires = '>=3.7',
    install_requires = [
        'numpy', 'scipy>=1.7', 'pandas', 'twisted', 'python-dateutil',
        'tabulate'
    ]
)
