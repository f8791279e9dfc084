# -*- coding: utf-8 -*-
from setuptools import setup

packages = \
['sflx',
 'sflx.cli',
 'sflx.criteria',
 'sflx.data',
 'sflx.index',
 'sflx.linalg',
 'sflx.oracle',
 'sflx.spectra']

package_data = \
{'': ['*'], 'sflx.data': ['*.json', 'problems/*.json']}

install_requires = \
['absl-py>=1.4.0,<2.0.0',
 'chex>=0.1.82,<0.2.0',
 'flax>=0.10.1,<0.11.0',
 'jax[cpu]>=0.4.11,<0.5.0',
 'joblib>=1.2.0,<2.0.0',
 'mkinit>=1.1.0,<2.0.0',
 'numpy>=1.23.4,<2.0.0',
 'pandas>=2.0.0,<3.0.0',
 'python-box>=7.3.2,<8.0.0',
 'scipy>=1.9.3,<2.0.0']

entry_points = \
{'console_scripts': ['sflx = sflx.cli.run:console_main']}

setup_kwargs = {
    'name': 'SFLX',
    'version': '0.1.0',
    'description': 'Spectral flow and bifurcation criteria for linearised elliptic systems, on JAX',
    'long_description': open('README.md', encoding='utf-8').read(),
    'long_description_content_type': 'text/markdown',
    'author': 'SFLX developers',
    'author_email': 'None',
    'maintainer': 'None',
    'maintainer_email': 'None',
    'url': 'None',
    'packages': packages,
    'package_data': package_data,
    'install_requires': install_requires,
    'entry_points': entry_points,
    'python_requires': '>=3.10,<4.0',
}


setup(**setup_kwargs)
