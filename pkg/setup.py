import setuptools

with open('README.md', 'r') as fh:
    long_description = fh.read()

install_requires = ['numpy', 'scipy', 'PyYAML']
docs_requires = ['Sphinx', 'sphinx-rtd-theme']
plots_requires = ['matplotlib']
test_requires = ['hypothesis']

setuptools.setup(
    name='fieldoscopysim',
    version='0.1.0',
    author='Tristan Kuehn',
    author_email='tkuehn@uwo.ca',
    license='BSD-3-Clause',
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: BSD License',
        'Programming Language :: Python :: 3',
        'Topic :: Scientific/Engineering :: Physics'
    ],
    description='Monte Carlo simulation of field-resolved weak-light detection',
    long_description=long_description,
    long_description_content_type='text/markdown',
    packages=setuptools.find_packages(exclude=['test', 'examples*']),
    python_requires='>=3.8',
    install_requires=install_requires,
    extras_require={'docs': docs_requires,
                    'plots': plots_requires,
                    'test': test_requires},
    entry_points={
        'console_scripts': ['fieldoscopysim = fieldoscopysim.cli:main']
    }
)
